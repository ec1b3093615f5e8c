"""Monte Carlo experiment harness: error curves, bandwidth sweeps, change detection.

Every trial draws from its own generator seeded by (master seed, cell, trial),
so outputs are a pure function of the config and master seed regardless of
how many worker threads run the trials.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy import stats as sps

from . import distributions as dist
from .changepoint import detect, default_window
from .distributions import GaussianMixture, GaussianSpec
from .kernels import KernelSpec, median_heuristic, sqdist
from .thresholds import (POLICIES, ThresholdSpec, permutation_labels,
                         permutation_quantile, split_statistics)
from .two_sample import decide

Bandwidth = Union[str, float]


class ConfigError(ValueError):
    pass


def _bandwidth(value) -> Bandwidth:
    if value == "median":
        return "median"
    try:
        w = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bandwidth must be a positive number or 'median', got {value!r}")
    if not w > 0:
        raise ConfigError(f"bandwidth must be positive, got {w}")
    return w


def _trial_rng(seed: int, cell: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, cell, trial])


def _run_trials(fn: Callable[[int], object], trials: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def _kernel_for(bw: Bandwidth, x, y) -> KernelSpec:
    if bw == "median":
        return KernelSpec(median_heuristic(np.vstack([x, y])))
    return KernelSpec(bw)


def config_hash(obj: dict) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def _header(cfg: dict, seed: int) -> str:
    return f"# config_sha256={config_hash(cfg)} seed={seed}\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _rows_to_csv(header: str, columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# -- two-sample error curves --------------------------------------------------

@dataclass(frozen=True)
class TwoSampleConfig:
    p: object
    q: object
    n_grid: tuple
    trials: int = 1000
    bandwidth: Bandwidth = 1.0
    policy: str = "permutation"
    alpha: float = 0.05
    B: int = 1000
    statistic: str = "biased"
    m_grid: tuple | None = None
    estimate_type_I: bool = True

    def __post_init__(self):
        if not self.n_grid or any(int(n) < 2 for n in self.n_grid):
            raise ConfigError("n_grid must be a non-empty list of sizes >= 2")
        if self.m_grid is not None and len(self.m_grid) != len(self.n_grid):
            raise ConfigError("m_grid must match n_grid in length")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.policy not in POLICIES or self.policy == "one_sample":
            raise ConfigError(f"policy {self.policy!r} is not a two-sample threshold")
        if self.statistic not in ("biased", "unbiased"):
            raise ConfigError(f"unknown statistic {self.statistic!r}")
        if not 0 < self.alpha < 1 or self.B < 1:
            raise ConfigError("alpha must lie in (0, 1) and B must be >= 1")
        if self.p.dim != self.q.dim:
            raise ConfigError("p and q differ in dimension")
        object.__setattr__(self, "bandwidth", _bandwidth(self.bandwidth))

    @property
    def null_only(self) -> bool:
        return self.p == self.q

    def sizes(self):
        ms = self.m_grid if self.m_grid is not None else self.n_grid
        return list(zip((int(n) for n in self.n_grid), (int(m) for m in ms)))

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("p", "q")}
        d.update(experiment="two_sample", p=dist.to_dict(self.p), q=dist.to_dict(self.q),
                 n_grid=list(self.n_grid), m_grid=None if self.m_grid is None else list(self.m_grid))
        return d

    @classmethod
    def from_dict(cls, obj: dict) -> "TwoSampleConfig":
        obj = dict(obj)
        obj.pop("experiment", None)
        try:
            p = dist.from_dict(obj.pop("p"))
            q = dist.from_dict(obj.pop("q"))
            obj["n_grid"] = tuple(obj["n_grid"])
            if obj.get("m_grid") is not None:
                obj["m_grid"] = tuple(obj["m_grid"])
            return cls(p=p, q=q, **obj)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"invalid two_sample config: {exc}") from exc


@dataclass(frozen=True)
class CurveRow:
    n: int
    m: int
    trials: int
    type_I_rate: float
    type_II_rate: float
    threshold_policy: str
    bandwidth_rule: str


@dataclass
class ErrorCurve:
    rows: list
    seed: int
    descriptor: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        cols = ["n", "m", "trials", "type_I_rate", "type_II_rate", "log_type_II",
                "threshold_policy", "bandwidth_rule"]
        out = []
        for r in self.rows:
            if math.isnan(r.type_II_rate):
                log2 = "nan"
            elif r.type_II_rate == 0:
                log2 = f"<{math.log(1.0 / r.trials)!r}"
            else:
                log2 = repr(math.log(r.type_II_rate))
            out.append([r.n, r.m, r.trials, r.type_I_rate, r.type_II_rate, log2,
                        r.threshold_policy, r.bandwidth_rule])
        return _rows_to_csv(_header(self.descriptor, self.seed), cols, out)


def _two_sample_trial(cfg: TwoSampleConfig, p, q, n, m, seed, cell, trial) -> bool:
    rng = _trial_rng(seed, cell, trial)
    x = dist.sample(p, n, rng)
    y = dist.sample(q, m, rng)
    spec = ThresholdSpec(cfg.policy, cfg.alpha, cfg.B, int(rng.integers(2**63)))
    return decide(x, y, _kernel_for(cfg.bandwidth, x, y), spec, cfg.statistic).rejected


def run_two_sample_experiment(cfg: TwoSampleConfig, seed: int = 0, threads: int = 1) -> ErrorCurve:
    """Empirical type-I and type-II rates at every (n, m) of the grid.

    With p == q only null trials run and ``type_II_rate`` is NaN.
    """
    rows = []
    for cell, (n, m) in enumerate(cfg.sizes()):
        t1 = t2 = math.nan
        if cfg.null_only or cfg.estimate_type_I:
            rej = _run_trials(lambda i: _two_sample_trial(cfg, cfg.p, cfg.p, n, m, seed, 2 * cell, i),
                              cfg.trials, threads)
            t1 = sum(rej) / cfg.trials
        if not cfg.null_only:
            rej = _run_trials(lambda i: _two_sample_trial(cfg, cfg.p, cfg.q, n, m, seed, 2 * cell + 1, i),
                              cfg.trials, threads)
            t2 = (cfg.trials - sum(rej)) / cfg.trials
        rule = "median" if cfg.bandwidth == "median" else f"fixed:{cfg.bandwidth!r}"
        rows.append(CurveRow(n, m, cfg.trials, t1, t2, cfg.policy, rule))
    return ErrorCurve(rows, seed, cfg.to_dict())


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    stderr: float
    intercept: float
    used: tuple       # x values kept
    excluded: tuple   # x values dropped for rate 0 or 1


def fit_exponent(curve: ErrorCurve | Sequence[tuple], normalization: str = "per_total_samples") -> ExponentFit:
    """Least-squares slope of -log(type-II rate) against sample size.

    ``normalization`` picks the abscissa: n + m (``per_total_samples``) or
    min(n, m) (``per_smaller_sample``). ``curve`` may also be a sequence of
    (n, m, rate) tuples. Rows with rate 0 or 1 are dropped and listed.
    """
    if isinstance(curve, ErrorCurve):
        pts = [(r.n, r.m, r.type_II_rate) for r in curve.rows]
    else:
        pts = [tuple(p) for p in curve]
    if normalization == "per_total_samples":
        xs = [n + m for n, m, _ in pts]
    elif normalization == "per_smaller_sample":
        xs = [min(n, m) for n, m, _ in pts]
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    used, excluded, ys = [], [], []
    for x, (_, _, rate) in zip(xs, pts):
        if 0 < rate < 1:
            used.append(x)
            ys.append(-math.log(rate))
        else:
            excluded.append(x)
    if len(used) < 3:
        raise ValueError(f"need >= 3 rows with type-II rate in (0, 1), have {len(used)} "
                         f"(excluded sizes: {excluded})")
    res = sps.linregress(np.asarray(used, dtype=float), np.asarray(ys))
    return ExponentFit(float(res.slope), float(res.stderr), float(res.intercept),
                       tuple(used), tuple(excluded))


# -- bandwidth sweep ----------------------------------------------------------

def grid_of_normals(spacing: float = 10.0, size: int = 3, correlation: float = 0.0) -> GaussianMixture:
    """size x size grid of unit-variance 2-D normals with the given within-component correlation."""
    cov = np.array([[1.0, correlation], [correlation, 1.0]])
    centres = [np.array([i * spacing, j * spacing]) for i in range(size) for j in range(size)]
    return GaussianMixture(tuple(GaussianSpec(c, cov) for c in centres))


def random_mixture_pair(rng: np.random.Generator, k: int = 5, low: float = 0.0, high: float = 10.0,
                        var: float = 1.0):
    """1-D mixture with uniform random means, and its copy with N(0, 1)-perturbed means."""
    mu = rng.uniform(low, high, size=k)
    nu = mu + rng.standard_normal(k)
    p = GaussianMixture(tuple(GaussianSpec([v], [[var]]) for v in mu))
    q = GaussianMixture(tuple(GaussianSpec([v], [[var]]) for v in nu))
    return p, q


@dataclass(frozen=True)
class SweepConfig:
    setting: str = "grid"           # "grid" | "mixture"
    bandwidths: tuple = ("median",)
    n_grid: tuple = (360, 720)
    trials: int = 200
    B: int = 500
    alpha: float = 0.05
    statistic: str = "unbiased"
    epsilon: float = 6.0
    spacing: float = 10.0

    def __post_init__(self):
        if self.setting not in ("grid", "mixture"):
            raise ConfigError(f"unknown sweep setting {self.setting!r}")
        if not self.bandwidths:
            raise ConfigError("bandwidth grid is empty")
        object.__setattr__(self, "bandwidths", tuple(_bandwidth(b) for b in self.bandwidths))
        if not self.n_grid or any(int(n) < 2 for n in self.n_grid):
            raise ConfigError("n_grid must be a non-empty list of sizes >= 2")
        if self.trials < 1 or self.B < 1 or not 0 < self.alpha < 1:
            raise ConfigError("trials and B must be >= 1, alpha in (0, 1)")
        if self.statistic not in ("biased", "unbiased"):
            raise ConfigError(f"unknown statistic {self.statistic!r}")

    @property
    def correlation(self) -> float:
        return (self.epsilon - 1.0) / (self.epsilon + 1.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(experiment="sweep", bandwidths=list(self.bandwidths), n_grid=list(self.n_grid))
        return d

    @classmethod
    def from_dict(cls, obj: dict) -> "SweepConfig":
        obj = dict(obj)
        obj.pop("experiment", None)
        for key in ("bandwidths", "n_grid"):
            if key in obj:
                obj[key] = tuple(obj[key])
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(f"invalid sweep config: {exc}") from exc


@dataclass(frozen=True)
class SweepRow:
    bandwidth: str
    n: int
    trials: int
    type_II_rate: float
    median_bandwidth: float   # mean median-heuristic bandwidth over trials, for reference


@dataclass
class SweepTable:
    rows: list
    seed: int
    descriptor: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        cols = ["bandwidth", "n", "trials", "type_II_rate", "median_bandwidth"]
        return _rows_to_csv(_header(self.descriptor, self.seed), cols,
                            [[r.bandwidth, r.n, r.trials, r.type_II_rate, r.median_bandwidth]
                             for r in self.rows])


def _sweep_trial(cfg: SweepConfig, n: int, seed: int, cell: int, trial: int):
    """Per-bandwidth rejections for one trial, plus that trial's median bandwidth.

    The pooled distances and permutation splits are shared across bandwidths.
    """
    rng = _trial_rng(seed, cell, trial)
    if cfg.setting == "grid":
        p = grid_of_normals(cfg.spacing)
        q = grid_of_normals(cfg.spacing, correlation=cfg.correlation)
    else:
        p, q = random_mixture_pair(rng)
    x = dist.sample(p, n, rng)
    y = dist.sample(q, n, rng)
    z = np.vstack([x, y])
    d2 = sqdist(z, z)
    med = median_heuristic(z)
    labels = permutation_labels(2 * n, n, cfg.B, int(rng.integers(2**63)))
    identity = np.zeros((1, 2 * n))
    identity[0, :n] = 1.0
    out = []
    for bw in cfg.bandwidths:
        k = KernelSpec(med if bw == "median" else bw)
        G = k.from_sqdist(d2)
        observed = float(split_statistics(G, identity, n, cfg.statistic)[0])
        null = split_statistics(G, labels, n, cfg.statistic)
        out.append(observed > permutation_quantile(null, observed, cfg.alpha))
    return out, med


def run_bandwidth_sweep(cfg: SweepConfig, seed: int = 0, threads: int = 1) -> SweepTable:
    """Type-II rate of the permutation test at each (bandwidth, n)."""
    rows = []
    for cell, n in enumerate(int(v) for v in cfg.n_grid):
        res = _run_trials(lambda i: _sweep_trial(cfg, n, seed, cell, i), cfg.trials, threads)
        meds = [r[1] for r in res]
        for j, bw in enumerate(cfg.bandwidths):
            rejected = sum(r[0][j] for r in res)
            rows.append(SweepRow(bw if bw == "median" else repr(bw), n, cfg.trials,
                                 (cfg.trials - rejected) / cfg.trials, float(np.mean(meds))))
    return SweepTable(rows, seed, cfg.to_dict())


# -- change detection ---------------------------------------------------------

@dataclass(frozen=True)
class ChangepointConfig:
    shifts: tuple = (0.0, 0.5, 1.0, 2.0, 3.0)
    n: int = 200
    trials: int = 200
    change_index: int | None = None
    window: tuple | None = None
    alpha: float = 0.05
    bandwidth: Bandwidth = "median"
    dim: int = 1
    tolerance: int = 10

    def __post_init__(self):
        if not self.shifts:
            raise ConfigError("shift list is empty")
        if self.n < 4 or self.trials < 1 or self.dim < 1:
            raise ConfigError("need n >= 4, trials >= 1, dim >= 1")
        t = self.change_index if self.change_index is not None else self.n // 2
        if not 1 < t < self.n:
            raise ConfigError("change_index must lie strictly inside (1, n)")
        if self.window is not None:
            a, b = self.window
            if not 1 < a <= b < self.n:
                raise ConfigError(f"window {self.window} must satisfy 1 < a <= b < n")
            object.__setattr__(self, "window", (int(a), int(b)))
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        object.__setattr__(self, "bandwidth", _bandwidth(self.bandwidth))

    @property
    def t(self) -> int:
        return self.change_index if self.change_index is not None else self.n // 2

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(experiment="changepoint", shifts=list(self.shifts),
                 window=None if self.window is None else list(self.window))
        return d

    @classmethod
    def from_dict(cls, obj: dict) -> "ChangepointConfig":
        obj = dict(obj)
        obj.pop("experiment", None)
        if "shifts" in obj:
            obj["shifts"] = tuple(float(s) for s in obj["shifts"])
        if obj.get("window") is not None:
            obj["window"] = tuple(obj["window"])
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(f"invalid changepoint config: {exc}") from exc


@dataclass(frozen=True)
class ChangepointRow:
    shift: float
    n: int
    trials: int
    detection_rate: float
    mean_abs_error: float     # over detections; NaN when none
    within_tolerance: float   # fraction of detections with |t_hat - t| <= tolerance; NaN when none


@dataclass
class ChangepointTable:
    rows: list
    seed: int
    descriptor: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        cols = ["shift", "n", "trials", "detection_rate", "mean_abs_error", "within_tolerance"]
        return _rows_to_csv(_header(self.descriptor, self.seed), cols,
                            [[r.shift, r.n, r.trials, r.detection_rate, r.mean_abs_error,
                              r.within_tolerance] for r in self.rows])


def _changepoint_trial(cfg: ChangepointConfig, shift: float, seed: int, cell: int, trial: int):
    rng = _trial_rng(seed, cell, trial)
    z = rng.standard_normal((cfg.n, cfg.dim))
    z[cfg.t:] += shift
    k = KernelSpec(median_heuristic(z)) if cfg.bandwidth == "median" else KernelSpec(cfg.bandwidth)
    a, b = cfg.window if cfg.window is not None else default_window(cfg.n)
    res = detect(z, k, a, b, cfg.alpha)
    return res.detected, res.estimated_index


def run_changepoint_experiment(cfg: ChangepointConfig, seed: int = 0, threads: int = 1) -> ChangepointTable:
    """Detection rate and localization error of the scan test per mean shift."""
    rows = []
    for cell, shift in enumerate(cfg.shifts):
        res = _run_trials(lambda i: _changepoint_trial(cfg, shift, seed, cell, i), cfg.trials, threads)
        errs = [abs(idx - cfg.t) for det, idx in res if det]
        rate = len(errs) / cfg.trials
        mae = float(np.mean(errs)) if errs else math.nan
        within = float(np.mean([e <= cfg.tolerance for e in errs])) if errs else math.nan
        rows.append(ChangepointRow(float(shift), cfg.n, cfg.trials, rate, mae, within))
    return ChangepointTable(rows, seed, cfg.to_dict())


def binomial_se(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


def load_experiment(obj: dict):
    """Build the config object named by ``obj['experiment']``."""
    kind = obj.get("experiment")
    if kind == "two_sample":
        return TwoSampleConfig.from_dict(obj)
    if kind == "changepoint":
        return ChangepointConfig.from_dict(obj)
    if kind == "sweep":
        return SweepConfig.from_dict(obj)
    raise ConfigError(f"unknown experiment {kind!r}; expected two_sample, changepoint or sweep")


def run_experiment(cfg, seed: int = 0, threads: int = 1):
    if isinstance(cfg, TwoSampleConfig):
        return run_two_sample_experiment(cfg, seed, threads)
    if isinstance(cfg, ChangepointConfig):
        return run_changepoint_experiment(cfg, seed, threads)
    if isinstance(cfg, SweepConfig):
        return run_bandwidth_sweep(cfg, seed, threads)
    raise TypeError(f"unknown config type {type(cfg).__name__}")
