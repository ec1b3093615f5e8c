"""Command-line front end.

Exit status: 0 on success, 2 when arguments or input files are invalid,
1 when the computation itself fails. Output files are written to a
temporary sibling and renamed into place only on success.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import distributions as dist
from .changepoint import default_window, detect
from .distributions import DiscreteDistribution
from .exponents import exponent_report, report_for_ratio
from .kernels import KernelSpec, median_heuristic
from .sanov import (curve_to_csv, enumerate_types, exact_error_curve, kld_to_types,
                    log_type_probabilities, type_count)
from .simulation import ConfigError, SweepConfig, load_experiment, run_experiment
from .thresholds import ThresholdSpec
from .two_sample import decide

HELP_WIDTH = 100


class CliError(Exception):
    """Invalid invocation or input; maps to exit status 2."""


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=HELP_WIDTH)


# -- I/O helpers --------------------------------------------------------------

def read_csv_sample(path: str, header: bool = False) -> np.ndarray:
    """One observation per row, comma-separated reals."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}")
    rows = []
    width = None
    with fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not rec or all(not f.strip() for f in rec):
                continue
            try:
                vals = [float(f) for f in rec]
            except ValueError:
                raise CliError(f"{path}: row {lineno}: non-numeric field in {rec!r}")
            if not all(np.isfinite(vals)):
                raise CliError(f"{path}: row {lineno}: non-finite value")
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise CliError(f"{path}: row {lineno}: expected {width} columns, found {len(vals)}")
            rows.append(vals)
    if not rows:
        raise CliError(f"{path}: no observations")
    return np.asarray(rows, dtype=np.float64)


def read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc})")


def read_distribution(path: str):
    try:
        return dist.from_dict(read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"{path}: invalid distribution ({exc})")


def write_output(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def parse_bandwidth(text: str):
    if text == "median":
        return "median"
    try:
        w = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number or 'median', got {text!r}")
    if not w > 0:
        raise argparse.ArgumentTypeError("bandwidth must be positive")
    return w


def parse_window(text: str):
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b' with integers, got {text!r}")
    return a, b


def parse_alpha(text: str) -> float:
    try:
        a = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0 < a < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return a


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _kernel(bandwidth, pooled) -> KernelSpec:
    if bandwidth == "median":
        try:
            return KernelSpec(median_heuristic(pooled))
        except ValueError as exc:
            raise CliError(str(exc))
    return KernelSpec(bandwidth)


# -- subcommands --------------------------------------------------------------
# each returns a zero-argument callable: everything before it is input
# validation (exit 2), the callable itself is the computation (exit 1)

_THRESHOLDS = {"ldb": "ldb", "permutation": "permutation", "combined": "combined",
               "unbiased": "unbiased_ldb"}


def cmd_test(args):
    x = read_csv_sample(args.x, args.header)
    y = read_csv_sample(args.y, args.header)
    if x.shape[1] != y.shape[1]:
        raise CliError(f"dimension mismatch: {args.x} has {x.shape[1]} columns, {args.y} has {y.shape[1]}")
    policy = _THRESHOLDS[args.threshold]
    if args.statistic == "biased" and policy == "unbiased_ldb":
        raise CliError("--threshold unbiased requires --statistic unbiased")
    if args.statistic == "unbiased" and policy == "ldb":
        raise CliError("--threshold ldb pairs with the biased statistic; use --threshold unbiased")
    if args.statistic == "unbiased" and policy in ("unbiased_ldb", "combined") and len(x) != len(y):
        raise CliError("the unbiased distribution-free threshold needs equal sample sizes")
    kernel = _kernel(args.bandwidth, np.vstack([x, y]))
    spec = ThresholdSpec(policy, args.alpha, args.B, args.seed)

    def run():
        out = decide(x, y, kernel, spec, args.statistic).to_dict()
        out["bandwidth"] = kernel.bandwidth
        write_output(dump_json(out), args.out)
    return run


def cmd_changepoint(args):
    z = read_csv_sample(args.input, args.header)
    n = len(z)
    if args.window is not None:
        a, b = args.window
        if not 1 < a <= b < n:
            raise CliError(f"--window {a},{b} must satisfy 1 < a <= b < n = {n}")
    else:
        if n < 4:
            raise CliError("sequence too short for the default window")
        a, b = default_window(n)
    kernel = _kernel(args.bandwidth, z)

    def run():
        res = detect(z, kernel, a, b, args.alpha)
        out = res.to_dict(include_per_index=args.per_index)
        out.update(window=[a, b], bandwidth=kernel.bandwidth, n=n)
        write_output(dump_json(out), args.out)
    return run


def cmd_exponent(args):
    p = read_distribution(args.p)
    q = read_distribution(args.q)
    if p.dim != q.dim:
        raise CliError("distributions differ in dimension")
    if args.c is None and (args.n is None or args.m is None):
        raise CliError("give either --c or both --n and --m")
    if args.c is not None and not 0 < args.c < 1:
        raise CliError("--c must lie strictly between 0 and 1")

    def run():
        if args.c is not None:
            rep = report_for_ratio(p, q, args.c, args.degenerate)
        else:
            rep = exponent_report(p, q, args.n, args.m, args.degenerate)
        write_output(dump_json(rep.to_dict()), args.out)
    return run


def _verify_types(max_n: int, trials: int, seed: int) -> dict:
    """Type-count and type-probability sandwich checks for t in {2, 3}, n <= max_n."""
    rng = np.random.default_rng(seed)
    checked = violations = 0
    count_ok = True
    for t in (2, 3):
        for n in range(1, max_n + 1):
            types = enumerate_types(n, t)
            count_ok &= len(types) == type_count(n, t) <= (n + 1) ** t
            for _ in range(trials):
                pmf = rng.dirichlet(np.ones(t))
                logprob = log_type_probabilities(pmf, types)
                logup = -n * kld_to_types(types, pmf)
                loglo = logup - t * np.log(n + 1)
                ok = (loglo <= logprob + 1e-12) & (logprob <= logup + 1e-12)
                checked += len(types)
                violations += int((~ok).sum())
    return {"types_checked": checked, "sandwich_violations": violations, "type_counts_ok": bool(count_ok)}


def cmd_sanov(args):
    if args.p is not None:
        p = read_distribution(args.p)
    else:
        p = DiscreteDistribution.on_alphabet([0.5, 0.5])
    if args.q is not None:
        q = read_distribution(args.q)
    else:
        q = DiscreteDistribution.on_alphabet([0.9, 0.1])
    if not isinstance(p, DiscreteDistribution) or not isinstance(q, DiscreteDistribution):
        raise CliError("sanov needs discrete distributions")
    if not args.n_list or min(args.n_list) < 1:
        raise CliError("--n-list needs positive sizes")
    kernel = KernelSpec(args.bandwidth)

    def run():
        summary = _verify_types(args.verify_max_n, args.verify_trials, args.seed)
        rows = exact_error_curve(p, q, kernel, args.n_list, args.alpha)
        write_output(curve_to_csv(rows), args.out)
        sys.stderr.write(dump_json(summary))
        if summary["sandwich_violations"] or not summary["type_counts_ok"]:
            raise RuntimeError("method-of-types verification failed")
    return run


def _load_config(path: str):
    try:
        return load_experiment(read_json(path))
    except ConfigError as exc:
        raise CliError(f"{path}: {exc}")
    except (TypeError, ValueError, KeyError) as exc:
        raise CliError(f"{path}: invalid config ({exc})")


def cmd_simulate(args):
    cfg = _load_config(args.config)

    def run():
        write_output(run_experiment(cfg, args.seed, args.threads).to_csv(), args.out)
    return run


def cmd_sweep(args):
    obj = read_json(args.config)
    if isinstance(obj, dict):
        obj.setdefault("experiment", "sweep")
    try:
        cfg = load_experiment(obj)
    except (ConfigError, TypeError, ValueError, KeyError) as exc:
        raise CliError(f"{args.config}: {exc}")
    if not isinstance(cfg, SweepConfig):
        raise CliError(f"{args.config}: sweep needs an experiment of type 'sweep'")

    def run():
        write_output(run_experiment(cfg, args.seed, args.threads).to_csv(), args.out)
    return run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmdexp", formatter_class=_formatter,
                                     description="Kernel two-sample tests, change detection and error exponents.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p, threads=False):
        p.add_argument("--seed", type=int, default=0, help="master random seed (default: 0)")
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        if threads:
            p.add_argument("--threads", type=positive_int, default=1,
                           help="worker threads; results do not depend on it (default: 1)")

    def kernel_opts(p):
        p.add_argument("--kernel", choices=["gaussian"], default="gaussian", help="kernel family")
        p.add_argument("--bandwidth", type=parse_bandwidth, default="median",
                       help="Gaussian bandwidth w in exp(-|x-y|^2/w), or 'median' (default: median)")
        p.add_argument("--alpha", type=parse_alpha, default=0.05, help="significance level (default: 0.05)")
        p.add_argument("--header", action="store_true", help="input CSV files start with a header row")

    p = sub.add_parser("test", help="two-sample test on two CSV samples", formatter_class=_formatter)
    p.add_argument("--x", required=True, help="CSV file with the first sample")
    p.add_argument("--y", required=True, help="CSV file with the second sample")
    kernel_opts(p)
    p.add_argument("--threshold", choices=list(_THRESHOLDS), default="ldb",
                   help="threshold rule (default: ldb)")
    p.add_argument("--B", type=positive_int, default=1000, help="permutation replicates (default: 1000)")
    p.add_argument("--statistic", choices=["biased", "unbiased"], default="biased",
                   help="MMD estimator (default: biased)")
    common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("changepoint", help="off-line change-point scan on a CSV sequence",
                       formatter_class=_formatter)
    p.add_argument("--input", required=True, help="CSV file, one observation per row")
    kernel_opts(p)
    p.add_argument("--window", type=parse_window, default=None,
                   help="search window a,b (default: ceil(0.2n),floor(0.8n))")
    p.add_argument("--per-index", action="store_true", help="include every split statistic in the output")
    common(p)
    p.set_defaults(func=cmd_changepoint)

    p = sub.add_parser("exponent", help="optimal type-II error exponent for two distributions",
                       formatter_class=_formatter)
    p.add_argument("--p", required=True, help="JSON file with P")
    p.add_argument("--q", required=True, help="JSON file with Q")
    p.add_argument("--c", type=float, default=None, help="asymptotic ratio n/(n+m)")
    p.add_argument("--n", type=positive_int, default=None, help="first sample size (with --m)")
    p.add_argument("--m", type=positive_int, default=None, help="second sample size (with --n)")
    p.add_argument("--degenerate", action="store_true",
                   help="declare n/m -> infinity; report D(P||Q) per smaller sample")
    common(p)
    p.set_defaults(func=cmd_exponent)

    p = sub.add_parser("sanov", help="exact method-of-types checks and exact error curve (CSV)",
                       formatter_class=_formatter)
    p.add_argument("--p", default=None, help="JSON file with discrete P (default: (0.5, 0.5) on {0,1})")
    p.add_argument("--q", default=None, help="JSON file with discrete Q (default: (0.9, 0.1) on {0,1})")
    p.add_argument("--n-list", type=parse_int_list, default=[25, 50, 100, 200],
                   help="comma-separated n = m values (default: 25,50,100,200)")
    p.add_argument("--bandwidth", type=float, default=1.0, help="Gaussian bandwidth (default: 1.0)")
    p.add_argument("--alpha", type=parse_alpha, default=0.05, help="significance level (default: 0.05)")
    p.add_argument("--verify-max-n", type=positive_int, default=30,
                   help="largest n in the type sandwich checks (default: 30)")
    p.add_argument("--verify-trials", type=positive_int, default=20,
                   help="random P per (n, t) in the sandwich checks (default: 20)")
    common(p)
    p.set_defaults(func=cmd_sanov)

    p = sub.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config",
                       formatter_class=_formatter)
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    common(p, threads=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a bandwidth sweep from a JSON config", formatter_class=_formatter)
    p.add_argument("--config", required=True, help="sweep config (JSON)")
    common(p, threads=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on bad flags
    try:
        run = args.func(args)
    except (CliError, ConfigError, ValueError) as exc:
        print(f"mmdexp {args.command}: error: {exc}", file=sys.stderr)
        return 2
    try:
        run()
    except Exception as exc:  # noqa: BLE001 - any failure past validation is a runtime error
        print(f"mmdexp {args.command}: failed: {exc}", file=sys.stderr)
        return 1
    return 0


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
