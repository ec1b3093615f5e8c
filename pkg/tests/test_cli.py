import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mmdexp.cli import build_parser, main, read_csv_sample, CliError

GOLDEN = Path(__file__).parent / "golden"
SUBCOMMANDS = ["test", "changepoint", "exponent", "sanov", "simulate", "sweep"]


def _help_text(name):
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command").choices
    return parser.format_help() if name is None else sub[name].format_help()


@pytest.mark.parametrize("name", [None] + SUBCOMMANDS)
def test_help_matches_golden(name):
    path = GOLDEN / f"help_{name or 'main'}.txt"
    text = _help_text(name)
    if os.environ.get("MMDEXP_UPDATE_GOLDEN"):
        path.write_text(text)
    assert text == path.read_text()


@pytest.mark.parametrize("name", SUBCOMMANDS)
def test_help_documents_every_flag(name):
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command").choices[name]
    text = sub.format_help()
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in text
        if action.option_strings and action.dest != "help":
            assert action.help


@pytest.fixture
def coin_files(tmp_path):
    p = tmp_path / "p.json"
    q = tmp_path / "q.json"
    p.write_text(json.dumps({"type": "discrete", "support": [[0.0], [1.0]], "pmf": [0.5, 0.5]}))
    q.write_text(json.dumps({"type": "discrete", "support": [[0.0], [1.0]], "pmf": [0.9, 0.1]}))
    return p, q


@pytest.fixture
def sample_files(tmp_path):
    rng = np.random.default_rng(0)
    x = tmp_path / "x.csv"
    y = tmp_path / "y.csv"
    np.savetxt(x, rng.normal(size=(40, 2)), delimiter=",", header="a,b", comments="")
    np.savetxt(y, rng.normal(2, 1, size=(40, 2)), delimiter=",", header="a,b", comments="")
    return x, y


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_exponent_command(coin_files, capsys):
    p, q = coin_files
    code, out, _ = run(["exponent", "--p", p, "--q", q, "--c", "0.5"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert round(rep["exponent"], 6) == 0.111572
    assert rep["regime"] == "balanced"
    code, out, _ = run(["exponent", "--p", p, "--q", q, "--n", "100", "--m", "1", "--degenerate"], capsys)
    assert json.loads(out)["normalization"] == "per_smaller_sample"


def test_test_command(sample_files, capsys):
    x, y = sample_files
    code, out, _ = run(["test", "--x", x, "--y", y, "--header", "--threshold", "combined", "--B", "100"], capsys)
    assert code == 0
    res = json.loads(out)
    assert res["decision"] == "reject_H0" and res["n"] == 40


def test_unbiased_threshold_name(sample_files, capsys):
    x, y = sample_files
    code, out, _ = run(["test", "--x", x, "--y", y, "--header", "--statistic", "unbiased",
                        "--threshold", "unbiased", "--bandwidth", "2.0"], capsys)
    assert code == 0
    assert json.loads(out)["threshold_policy"] == "unbiased_ldb"


def test_malformed_csv_names_row(tmp_path, sample_files, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,2.0\n3.0,oops\n")
    code, _, err = run(["test", "--x", bad, "--y", sample_files[1], "--header"], capsys)
    assert code == 2
    assert "row 2" in err


def test_ragged_csv(tmp_path):
    bad = tmp_path / "ragged.csv"
    bad.write_text("1,2\n3\n")
    with pytest.raises(CliError, match="row 2"):
        read_csv_sample(str(bad))


@pytest.mark.parametrize("argv", [
    ["test", "--x", "missing.csv", "--y", "missing.csv"],
    ["test", "--x", "X", "--y", "Y", "--threshold", "unbiased"],
    ["exponent", "--p", "P", "--q", "Q"],
    ["changepoint", "--input", "Z", "--window", "1,5"],
])
def test_config_errors_exit_2(argv, sample_files, coin_files, capsys):
    subs = {"X": sample_files[0], "Y": sample_files[1], "P": coin_files[0], "Q": coin_files[1],
            "Z": sample_files[0]}
    code, _, err = run([subs.get(a, a) for a in argv], capsys)
    assert code == 2
    assert "error" in err


@pytest.mark.parametrize("argv", [["frobnicate"], ["test", "--unknown"], ["test", "--x", "a", "--y", "b", "--alpha", "2"],
                                  ["changepoint", "--input", "z", "--bandwidth", "wide"]])
def test_parser_rejects(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_runtime_failure_exit_1_and_no_partial_output(tmp_path, capsys):
    z = tmp_path / "z.csv"
    np.savetxt(z, np.zeros((20, 1)), delimiter=",")
    out = tmp_path / "out.json"
    # all observations identical: the median heuristic cannot pick a bandwidth -> input error
    code, _, _ = run(["changepoint", "--input", z, "--out", out], capsys)
    assert code == 2 and not out.exists()
    bad_cfg = tmp_path / "cfg.json"
    # valid config whose run fails: point-mass samples make the median heuristic degenerate
    bad_cfg.write_text(json.dumps({"experiment": "two_sample", "n_grid": [5], "trials": 2, "B": 10,
                                   "bandwidth": "median",
                                   "p": {"type": "discrete", "support": [[0.0]], "pmf": [1.0]},
                                   "q": {"type": "discrete", "support": [[0.0]], "pmf": [1.0]}}))
    out_csv = tmp_path / "out.csv"
    code, _, err = run(["simulate", "--config", bad_cfg, "--out", out_csv], capsys)
    assert code == 1 and "failed" in err
    assert not out_csv.exists()
    assert list(tmp_path.glob(".out.csv*")) == []


def test_changepoint_command(tmp_path, capsys):
    rng = np.random.default_rng(1)
    z = tmp_path / "z.csv"
    np.savetxt(z, np.r_[rng.normal(size=100), rng.normal(8, 1, size=100)], delimiter=",")
    code, out, _ = run(["changepoint", "--input", z, "--per-index", "--window", "40,160",
                        "--bandwidth", "4"], capsys)
    assert code == 0
    res = json.loads(out)
    assert res["detected"] and abs(res["estimated_index"] - 100) <= 3
    assert len(res["per_index_statistics"]) == 121


def test_sanov_command(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    code, _, err = run(["sanov", "--n-list", "5,10", "--verify-max-n", "6", "--verify-trials", "3",
                        "--out", out], capsys)
    assert code == 0
    assert out.read_text().splitlines()[0] == "n,m,beta,rate,dstar"
    assert json.loads(err)["sandwich_violations"] == 0


def _write_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "experiment": "two_sample", "n_grid": [10, 20], "trials": 12, "B": 40, "bandwidth": "median",
        "p": {"type": "gaussian", "mean": [0.25, 0.25], "cov": [[1, 0], [0, 1]]},
        "q": {"type": "gaussian", "mean": [1.0, 1.0], "cov": [[1, 0], [0, 1]]}}))
    return cfg


def test_simulate_is_byte_identical(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    outs = []
    for i, threads in enumerate([1, 1, 4]):
        out = tmp_path / f"o{i}.csv"
        assert run(["simulate", "--config", cfg, "--seed", 7, "--threads", threads, "--out", out], capsys)[0] == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_sweep_requires_sweep_config(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    code, _, _ = run(["sweep", "--config", cfg], capsys)
    assert code == 2
    sweep = tmp_path / "sweep.json"
    sweep.write_text(json.dumps({"setting": "mixture", "bandwidths": ["median", 1.0], "n_grid": [15],
                                 "trials": 4, "B": 20}))
    code, out, _ = run(["sweep", "--config", sweep, "--seed", 1], capsys)
    assert code == 0 and out.splitlines()[1].startswith("bandwidth,n")


def test_module_entry_point(coin_files):
    p, q = coin_files
    res = subprocess.run([sys.executable, "-m", "mmdexp", "exponent", "--p", str(p), "--q", str(q),
                          "--c", "0.5"], capture_output=True, text=True, check=True)
    assert round(json.loads(res.stdout)["exponent"], 6) == 0.111572
