"""Command-line front end.

Subcommands
-----------
gen     generate a problem directory
run     run the diagnostic pipeline on one problem and write CSV/JSON tables
sweep   repeat ``run`` over several seeds and aggregate empirical properties
report  print the Table-1 layout of a finished run

Exit codes: 0 on success, 1 on invalid input, 2 when a hard invariant fails.
``KRL_THREADS`` caps the number of seeds processed concurrently by ``sweep``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path


from .diagnostics import InconsistencyError
from .io import ensure_writable, load_problem, read_csv, save_problem
from .pipeline import ExperimentConfig, run_experiment, sweep_checks, write_results
from .problem_gen import TestProblem, assemble_problem

EXIT_OK, EXIT_INVALID, EXIT_INVARIANT = 0, 1, 2


class InvariantFailure(RuntimeError):
    pass


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _add_problem_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("problem")
    g.add_argument("--n", type=int, default=500)
    g.add_argument("--m", type=int, default=None, help="rows (default: n)")
    g.add_argument("--spectrum", choices=["severe", "power", "explicit"], default="power")
    g.add_argument("--zeta", type=float, default=1.0)
    g.add_argument("--rho", type=float, default=None)
    g.add_argument("--alpha", type=float, default=None)
    g.add_argument("--values", type=_floats, default=None, help="comma-separated distinct values")
    g.add_argument("--multiplicities", type=_ints, default=None, help="comma-separated counts")
    g.add_argument("--noise-level", "--noise", dest="noise_level", type=float, default=1e-3)
    g.add_argument("--seed", type=int, default=0)


def _add_run_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("solver")
    g.add_argument("--kmax", type=int, default=10)
    g.add_argument("--reorth", action=argparse.BooleanOptionalAction, default=True)
    g.add_argument("--tau", type=float, default=1.01)
    g.add_argument("--formats", type=lambda t: [s for s in t.split(",") if s], default=["csv", "json"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="krylovreg", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a problem directory")
    _add_problem_flags(p)
    p.add_argument("--out", default="problem")

    p = sub.add_parser("run", help="run the pipeline on one problem")
    _add_problem_flags(p)
    _add_run_flags(p)
    p.add_argument("--problem", default=None, help="load a directory written by gen")
    p.add_argument("--out", default="run")

    p = sub.add_parser("sweep", help="run several seeds and aggregate")
    _add_problem_flags(p)
    _add_run_flags(p)
    p.add_argument("--seeds", type=_ints, required=True, help="comma-separated seeds")
    p.add_argument("--out", default="sweep")

    p = sub.add_parser("report", help="print the Table-1 layout of a run directory")
    p.add_argument("run_dir")
    return parser


def _config(args, check_problem: bool = True) -> ExperimentConfig:
    fields = ExperimentConfig.__dataclass_fields__
    cfg = ExperimentConfig(**{k: v for k, v in vars(args).items() if k in fields and v is not None})
    cfg.validate(problem=check_problem)
    return cfg


def _problem_from_dir(path) -> TestProblem:
    A, b, x_true, meta, problem = load_problem(path)
    if problem is not None:
        return problem
    # raw data without a generating spec: no exact factors, no noise split
    return TestProblem(A=A, U=None, V=None, sigma=None, x_true=x_true, b_true=None, e=None, b=b, spec=None)


def cmd_gen(args) -> int:
    cfg = _config(args)
    problem = assemble_problem(cfg.problem_spec())
    out = ensure_writable(args.out)
    save_problem(problem, out)
    print(f"wrote {out}")
    return EXIT_OK


def _run_one(cfg: ExperimentConfig, seed=None, problem=None):
    if problem is None:
        problem = assemble_problem(cfg.problem_spec(seed))
    return run_experiment(problem, kmax=cfg.kmax, reorth=cfg.reorth, tau=cfg.tau)


def cmd_run(args) -> int:
    problem = None
    if args.problem:
        cfg = _config(args, check_problem=False)
        problem = _problem_from_dir(args.problem)
        if problem.spec is not None:
            cfg = cfg.with_problem_spec(problem.spec)
    else:
        cfg = _config(args)
    res = _run_one(cfg, problem=problem)
    out = write_results(res, cfg, args.out)
    s = res.lsqr.summary()
    print(f"wrote {out}: k_star={s['k_star']} k_dp={s['k_dp']} s={res.reorg.s}")
    bad = res.first_failure
    if bad is not None:
        raise InvariantFailure(f"invariant {bad.name} failed {bad.detail}".rstrip())
    return EXIT_OK


def _threads() -> int:
    raw = os.environ.get("KRL_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"KRL_THREADS must be a positive integer, got {raw!r}")
    if value < 1:
        raise ValueError(f"KRL_THREADS must be a positive integer, got {raw!r}")
    return value


def _rate(flags):
    flags = [f for f in flags if f is not None]
    return None if not flags else sum(bool(f) for f in flags) / len(flags)


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if not cfg.seeds:
        raise ValueError("sweep needs at least one seed")
    out = ensure_writable(args.out)
    with ThreadPoolExecutor(max_workers=min(_threads(), len(cfg.seeds))) as pool:
        results = list(pool.map(lambda sd: sweep_checks(_run_one(cfg, seed=sd)), cfg.seeds))
    # fold in seed order so the output is independent of scheduling
    results.sort(key=lambda r: cfg.seeds.index(r["seed"]))
    rows_nb = sum(r["not_near_best_rows"] for r in results)
    hit_nb = sum(r["not_near_best_with_small_ritz"] for r in results)
    aggregate = {
        "seeds": len(results),
        "kstar_le_k0": _rate(r["kstar_le_k0"] for r in results),
        "interlaced_upto_kstar": _rate(r["interlaced_upto_kstar"] for r in results),
        "count_below_within_bound": _rate(r["count_below_within_bound"] for r in results),
        "error_rises_10pct": _rate(r["error_rises_10pct"] for r in results),
        "small_ritz_when_not_near_best": None if rows_nb == 0 else hit_nb / rows_nb,
        "invariants_ok": _rate(r["invariants_ok"] for r in results),
    }
    payload = {"config": cfg.to_dict(), "per_seed": results, "aggregate": aggregate}
    with open(out / "sweep.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    print(json.dumps(aggregate, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_report(args) -> int:
    path = Path(args.run_dir) / "table1.csv"
    if not path.exists():
        raise ValueError(f"{path} not found; run `krylovreg run` first")
    rows = read_csv(path)
    print(f"{'k':>3}  {'gamma_k':>12}  {'location':<22} {'near best':<9} {'#below':>6}  {'max':<22} attained")
    for r in rows:
        loc = f"(s{r['interval_lo_idx']}, s{r['interval_hi_idx']}) ~ s{r['closer_to']}"
        print(
            f"{int(r['k']):>3}  {float(r['gamma_k']):>12.4e}  {loc:<22} {r['near_best']:<9} "
            f"{r['count_below']:>6}  {r['max_count_allowed']:<22} {r['attained']}"
        )
    summary = Path(args.run_dir) / "summary.json"
    if summary.exists():
        with open(summary) as fh:
            s = json.load(fh)["summary"]
        print(f"k_star={s['lsqr']['k_star']} k_dp={s['lsqr']['k_dp']} k0={s['k0_oracle']} ok={s['ok']}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "sweep": cmd_sweep, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InvariantFailure, InconsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, FileNotFoundError, PermissionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
