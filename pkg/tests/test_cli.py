import json

import numpy as np
import pytest

from krylovreg import cli
from krylovreg.diagnostics import TABLE1_CSV_HEADER
from krylovreg.io import csv_body, load_problem, read_csv
from krylovreg.pipeline import ExperimentConfig, Invariant, run_experiment
from krylovreg.problem_gen import assemble_problem


def _main(*argv):
    return cli.main([str(a) for a in argv])


def test_gen_writes_directory_and_round_trips(tmp_path):
    out = tmp_path / "p"
    assert _main("gen", "--n", 500, "--spectrum", "power", "--alpha", 1, "--noise", 1e-3, "--seed", 7, "--out", out) == 0
    assert {"A.mtx", "b.vec", "meta.json"} <= {p.name for p in out.iterdir()}
    A, b, x_true, meta, problem = load_problem(out)
    ref = assemble_problem(ExperimentConfig(n=500, alpha=1.0, noise_level=1e-3, seed=7).problem_spec())
    np.testing.assert_array_equal(A, ref.A)
    np.testing.assert_array_equal(b, ref.b)
    assert problem is not None and problem.spec == ref.spec


def test_gen_rejects_rho_at_most_one(tmp_path, capsys):
    code = _main("gen", "--spectrum", "severe", "--rho", 0.9, "--out", tmp_path / "p")
    assert code == cli.EXIT_INVALID
    err = capsys.readouterr().err
    assert "rho" in err and "1" in err


def test_run_writes_table1_and_report(tmp_path, capsys):
    out = tmp_path / "r"
    assert _main("run", "--n", 200, "--alpha", 1, "--kmax", 10, "--seed", 1, "--out", out) == 0
    rows = read_csv(out / "table1.csv")
    assert tuple(rows[0].keys()) == TABLE1_CSV_HEADER
    assert [int(r["k"]) for r in rows] == list(range(1, 11))
    for name in ("lsqr.csv", "bidiag.csv", "picard.csv", "subspace.csv", "bounds.csv", "fig_gamma.csv", "summary.json"):
        assert (out / name).exists(), name
    with open(out / "table1.csv") as fh:
        header = [ln for ln in fh if ln.startswith("#")]
    cfg = json.loads(header[0][len("# config "):])
    assert cfg["alpha"] == 1.0 and cfg["kmax"] == 10

    capsys.readouterr()
    assert _main("report", out) == 0
    text = capsys.readouterr().out
    assert "gamma_k" in text and "k_star=" in text
    assert _main("report", tmp_path / "missing") == cli.EXIT_INVALID


def test_run_from_generated_problem(tmp_path):
    _main("gen", "--n", 80, "--alpha", 1.5, "--seed", 3, "--out", tmp_path / "p")
    assert _main("run", "--problem", tmp_path / "p", "--kmax", 5, "--out", tmp_path / "r") == 0
    with open(tmp_path / "r" / "summary.json") as fh:
        payload = json.load(fh)
    assert payload["config"]["seed"] == 3 and payload["config"]["n"] == 80


def test_noise_free_run_has_no_semi_convergence(tmp_path):
    out = tmp_path / "r"
    assert _main("run", "--n", 60, "--alpha", 1, "--noise", 0, "--kmax", 60, "--out", out) == 0
    with open(out / "summary.json") as fh:
        s = json.load(fh)["summary"]
    assert s["lsqr"]["semi_convergent"] is False
    assert s["k0_oracle"] == s["s"] == 60
    assert s["lsqr"]["k_star"] <= s["s"]


def test_invariant_failure_exit_code(tmp_path, monkeypatch, capsys):
    def broken(*args, **kw):
        res = run_experiment(*args, **kw)
        res.invariants.append(Invariant("planted", False, "on purpose"))
        return res

    monkeypatch.setattr(cli, "run_experiment", broken)
    assert _main("run", "--n", 40, "--alpha", 1, "--kmax", 3, "--out", tmp_path / "r") == cli.EXIT_INVARIANT
    assert "planted" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ("run", "--n", 40, "--alpha", 1, "--kmax", 0),
        ("run", "--n", 40, "--alpha", 1, "--tau", 0.5),
        ("run", "--n", 40, "--alpha", 1, "--formats", "csv,xml"),
        ("run", "--n", 40, "--spectrum", "power"),
    ],
)
def test_run_validation(tmp_path, argv):
    assert _main(*argv, "--out", tmp_path / "r") == cli.EXIT_INVALID


def test_sweep_rejects_empty_seed_list(tmp_path):
    assert _main("sweep", "--n", 40, "--alpha", 1, "--seeds", ",", "--out", tmp_path / "s") == cli.EXIT_INVALID


@pytest.mark.parametrize("value", ["0", "-2", "many"])
def test_sweep_rejects_bad_thread_count(tmp_path, monkeypatch, value):
    monkeypatch.setenv("KRL_THREADS", value)
    code = _main("sweep", "--n", 40, "--alpha", 1, "--seeds", "1,2", "--out", tmp_path / "s")
    assert code == cli.EXIT_INVALID


def test_sweep_aggregate_independent_of_threads(tmp_path, monkeypatch):
    argv = ("sweep", "--n", 60, "--spectrum", "severe", "--rho", 2.5, "--kmax", 8, "--seeds", "3,1,2")
    payloads = []
    for threads in ("1", "3"):
        monkeypatch.setenv("KRL_THREADS", threads)
        out = tmp_path / threads
        assert _main(*argv, "--out", out) == 0
        with open(out / "sweep.json") as fh:
            payloads.append(json.load(fh))
    for key in ("per_seed", "aggregate"):
        assert payloads[0][key] == payloads[1][key]
    assert [r["seed"] for r in payloads[0]["per_seed"]] == [3, 1, 2]
    assert 0.0 <= payloads[0]["aggregate"]["interlaced_upto_kstar"] <= 1.0


def test_csv_bodies_are_byte_identical(tmp_path):
    argv = ("run", "--n", 100, "--alpha", 0.6, "--kmax", 8, "--seed", 5)
    _main(*argv, "--out", tmp_path / "a")
    _main(*argv, "--out", tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert names
    for name in names:
        assert csv_body(tmp_path / "a" / name) == csv_body(tmp_path / "b" / name)


@pytest.mark.slow
def test_alpha2_interlacing_pattern(tmp_path):
    out = tmp_path / "r"
    assert _main("run", "--n", 1000, "--alpha", 2, "--kmax", 20, "--out", out) == 0
    rows = read_csv(out / "fig_ritz.csv")
    flags = [r["interlaced"] == "true" for r in rows if r["i"] == "1"]
    first_false = flags.index(False)
    assert first_false >= 2 and all(flags[:first_false])
    assert sum(flags[first_false:]) <= 1
