"""End-to-end experiment: problem, SVD oracle, bidiagonalization, LSQR, reports.

The CLI and the demo scripts are thin wrappers over :func:`run_experiment`
and :func:`write_results`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

import numpy as np

from .bidiag import BIDIAG_CSV_HEADER, BidiagState, form_Bk, run_bidiag
from .diagnostics import (
    TABLE1_CSV_HEADER,
    BoundsReport,
    InconsistencyError,
    RankKReport,
    SubspaceReport,
    bounds_report,
    gamma_dense,
    gamma_trailing,
    ritz_report,
    subspace_report,
)
from .io import ensure_writable, write_csv
from .lsqr import LSQR_CSV_HEADER, LsqrRun, run_lsqr
from .problem_gen import ProblemSpec, SpectrumSpec, TestProblem, group_distinct
from .svd_oracle import PICARD_CSV_HEADER, CompactSVD, PicardReport, ReorganizedSVD, compute_svd, reorganize, transition_points

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "Invariant",
    "run_experiment",
    "write_results",
    "sweep_checks",
]


@dataclass
class ExperimentConfig:
    """Every knob of an experiment, flat so it maps one-to-one onto CLI flags."""

    n: int = 500
    m: Optional[int] = None
    spectrum: str = "power"
    zeta: float = 1.0
    rho: Optional[float] = None
    alpha: Optional[float] = None
    values: Optional[List[float]] = None
    multiplicities: Optional[List[int]] = None
    noise_level: float = 1e-3
    seed: int = 0
    kmax: int = 10
    reorth: bool = True
    tau: float = 1.01
    out: str = "out"
    formats: List[str] = field(default_factory=lambda: ["csv", "json"])
    seeds: List[int] = field(default_factory=list)

    def spectrum_spec(self) -> SpectrumSpec:
        return SpectrumSpec(
            kind=self.spectrum,
            n=self.n,
            zeta=self.zeta,
            rho=self.rho,
            alpha=self.alpha,
            values=None if self.values is None else tuple(self.values),
            multiplicities=None if self.multiplicities is None else tuple(self.multiplicities),
        )

    def problem_spec(self, seed: Optional[int] = None) -> ProblemSpec:
        return ProblemSpec(
            m=self.n if self.m is None else self.m,
            n=self.n,
            spectrum=self.spectrum_spec(),
            noise_level=self.noise_level,
            seed=self.seed if seed is None else seed,
        )

    def with_problem_spec(self, spec: ProblemSpec) -> "ExperimentConfig":
        """Copy of this config whose problem fields echo ``spec``."""
        sp = spec.spectrum
        return replace(
            self,
            n=spec.n,
            m=spec.m,
            spectrum=sp.kind,
            zeta=sp.zeta,
            rho=sp.rho,
            alpha=sp.alpha,
            values=None if sp.values is None else list(sp.values),
            multiplicities=None if sp.multiplicities is None else list(sp.multiplicities),
            noise_level=spec.noise_level,
            seed=spec.seed,
        )

    def validate(self, problem: bool = True):
        if problem:
            self.problem_spec()
        if self.kmax < 1:
            raise ValueError(f"kmax must be positive, got {self.kmax}")
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        bad = set(self.formats) - {"csv", "json"}
        if bad:
            raise ValueError(f"unknown output formats {sorted(bad)}")

    def to_dict(self) -> dict:
        return asdict(self)

    def header_lines(self) -> list:
        """Metadata lines for output files; only the timestamp varies between runs."""
        return [
            "config " + json.dumps(self.to_dict(), sort_keys=True),
            "generated " + datetime.now(timezone.utc).isoformat(timespec="seconds"),
        ]


@dataclass
class Invariant:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class ExperimentResult:
    problem: TestProblem
    svd: CompactSVD
    reorg: ReorganizedSVD
    picard: PicardReport
    state: BidiagState
    lsqr: LsqrRun
    gammas: np.ndarray  # gamma_1 .. gamma_K
    rank_reports: List[RankKReport]
    subspace_reports: List[SubspaceReport]
    bounds_reports: List[BoundsReport]
    invariants: List[Invariant]

    @property
    def ok(self) -> bool:
        return all(inv.ok for inv in self.invariants)

    @property
    def first_failure(self) -> Optional[Invariant]:
        return next((inv for inv in self.invariants if not inv.ok), None)

    def summary(self) -> dict:
        return {
            "s": int(self.reorg.s),
            "bidiag_steps": int(self.state.k),
            "terminated_at": self.state.terminated_at,
            "lsqr": self.lsqr.summary(),
            "k0_oracle": self.picard.k0_oracle,
            "k0_picard": self.picard.k0_picard,
            "picard_beta": self.picard.beta,
            "near_best": [r.near_best for r in self.rank_reports],
            "interlaced": [r.interlaced for r in self.rank_reports],
            "count_below": [r.count_below for r in self.rank_reports],
            "invariants": [asdict(inv) for inv in self.invariants],
            "ok": self.ok,
        }


def _factor_residuals(A, state: BidiagState, k: int):
    B = form_Bk(state, k)
    r1 = np.linalg.norm(A @ state.Q[:, :k] - state.P[:, :k + 1] @ B, 2)
    R2 = A.T @ state.P[:, :k + 1] - state.Q[:, :k] @ B.T
    if k == state.k and state.q_next is not None:
        R2[:, k] -= state.alpha_next * state.q_next
    elif k < state.k:
        R2[:, k] -= state.alphas[k] * state.Q[:, k]
    r2 = np.linalg.norm(R2, 2)
    return float(r1), float(r2)


def run_experiment(
    problem: TestProblem,
    kmax: int = 10,
    reorth: bool = True,
    tau: float = 1.01,
    subspace: bool = True,
    bounds: bool = True,
) -> ExperimentResult:
    """Run the full diagnostic pipeline on one problem.

    The bidiagonalization runs to termination so that ``gamma_k`` can be read
    from the trailing blocks of ``B_s``; without reorthogonalization that
    identity is unreliable and the dense difference norm is used instead.
    Ritz, subspace and bound reports cover ``k = 1..min(kmax, s-1)``.
    """
    A, b = problem.A, problem.b
    n = A.shape[1]
    if problem.U is not None and problem.V is not None:
        svd = CompactSVD.from_problem(problem)
        groups = problem.groups
    else:
        svd = compute_svd(A)
        groups = group_distinct(svd.sigma, 1e-12)
    reorg = reorganize(svd, b, groups)
    e = problem.e
    picard = transition_points(
        reorg, b, problem.x_true, e=e, b_true=problem.b_true if e is not None else None
    )
    state = run_bidiag(A, b, n, reorth=reorth)
    noise_norm = None if e is None else float(np.linalg.norm(e))
    lsqr = run_lsqr(state, b, problem.x_true, tau=tau, noise_norm=noise_norm, kmax=kmax)

    sig = reorg.sigma_distinct
    K = min(kmax, reorg.s - 1, state.k - 1)
    invariants: List[Invariant] = []
    scale = float(sig[0])

    kk = min(kmax, state.k)
    r1, r2 = _factor_residuals(A, state, kk)
    invariants.append(Invariant("factorization_AQ", r1 <= 1e-10 * scale, f"{r1:.3e}"))
    invariants.append(Invariant("factorization_ATP", r2 <= 1e-10 * scale, f"{r2:.3e}"))
    if reorth:
        P = state.P
        if not np.any(P[:, -1]):
            # terminated with P already spanning R^m: the last column is a zero placeholder
            P = P[:, :-1]
        ep = np.linalg.norm(P.T @ P - np.eye(P.shape[1]), 2)
        eq = np.linalg.norm(state.Q.T @ state.Q - np.eye(state.k), 2)
        invariants.append(Invariant("orthonormal_P", ep <= 1e-10, f"{ep:.3e}"))
        invariants.append(Invariant("orthonormal_Q", eq <= 1e-10, f"{eq:.3e}"))

    use_trailing = reorth and state.terminated
    Aprime = None if use_trailing else reorg.aprime()
    gammas = np.array(
        [gamma_trailing(state, k) if use_trailing else gamma_dense(Aprime, state, k) for k in range(1, K + 1)]
    )

    rank_reports: List[RankKReport] = []
    try:
        for k in range(1, K + 1):
            rank_reports.append(ritz_report(state, k, sig, gamma=gammas[k - 1]))
        invariants.append(Invariant("gamma_ge_sigma_next", True))
    except InconsistencyError as exc:
        invariants.append(Invariant("gamma_ge_sigma_next", False, str(exc)))
    if K >= 2:
        dec = bool(np.all(np.diff(gammas) < 0))
        invariants.append(Invariant("gamma_decreasing", dec))
    err_ok = all(r.sigma_minus_theta_ok for r in rank_reports)
    invariants.append(Invariant("sigma_minus_theta_le_gamma", err_ok))

    subspace_reports: List[SubspaceReport] = []
    if subspace and reorth:
        for k in range(1, K + 1):
            subspace_reports.append(subspace_report(reorg, b, state, k))
        pyth = max((abs(r.sin_theta_direct**2 + r.epsilon_k**2 - 1) for r in subspace_reports), default=0.0)
        invariants.append(Invariant("sin2_plus_eps2", pyth <= 1e-10, f"{pyth:.3e}"))
        held = all(r.bounds_hold for r in subspace_reports)
        invariants.append(Invariant("rayleigh_bounds", held))

    bounds_reports: List[BoundsReport] = []
    spec = problem.spec.spectrum if problem.spec is not None else None
    if bounds and spec is not None:
        for k in range(1, K + 1):
            bounds_reports.append(bounds_report(reorg, b, k, spec))

    return ExperimentResult(
        problem=problem,
        svd=svd,
        reorg=reorg,
        picard=picard,
        state=state,
        lsqr=lsqr,
        gammas=gammas,
        rank_reports=rank_reports,
        subspace_reports=subspace_reports,
        bounds_reports=bounds_reports,
        invariants=invariants,
    )


FIG_GAMMA_HEADER = ("k", "gamma_k", "sigma_kplus1")
FIG_RITZ_HEADER = ("k", "i", "theta_i", "sigma_i", "interlaced")
FIG_AB_HEADER = ("k", "alpha_plus_beta", "gamma_k")


def _fig_ritz_rows(res: ExperimentResult):
    sig = res.reorg.sigma_distinct
    for r in res.rank_reports:
        for i in range(1, r.k + 2):
            yield r.k, i, (r.theta[i - 1] if i <= r.k else None), sig[i - 1], r.interlaced


def _fig_ab_rows(res: ExperimentResult):
    st = res.state
    for k, g in enumerate(res.gammas, start=1):
        yield k, st.alphas[k] + st.betas[k + 1], g


def write_results(res: ExperimentResult, config: ExperimentConfig, out) -> Path:
    """Write every table of ``res`` into ``out`` (CSV and/or JSON per config)."""
    out = ensure_writable(out)
    meta = config.header_lines()
    sig = res.reorg.sigma_distinct
    if "csv" in config.formats:
        write_csv(out / "lsqr.csv", LSQR_CSV_HEADER, res.lsqr.rows(), meta)
        write_csv(out / "bidiag.csv", BIDIAG_CSV_HEADER, res.state.rows(), meta)
        write_csv(out / "picard.csv", PICARD_CSV_HEADER, res.picard.rows(), meta)
        write_csv(out / "table1.csv", TABLE1_CSV_HEADER, (r.row() for r in res.rank_reports), meta)
        write_csv(
            out / "fig_gamma.csv",
            FIG_GAMMA_HEADER,
            ((k, g, sig[k]) for k, g in enumerate(res.gammas, start=1)),
            meta,
        )
        write_csv(out / "fig_ritz.csv", FIG_RITZ_HEADER, _fig_ritz_rows(res), meta)
        write_csv(out / "fig_alpha_beta.csv", FIG_AB_HEADER, _fig_ab_rows(res), meta)
        if res.subspace_reports:
            write_csv(out / "subspace.csv", SubspaceReport.FIELDS, (r.row() for r in res.subspace_reports), meta)
        if res.bounds_reports:
            write_csv(out / "bounds.csv", BoundsReport.FIELDS, (r.row() for r in res.bounds_reports), meta)
    if "json" in config.formats:
        payload = {"config": config.to_dict(), "summary": res.summary()}
        with open(out / "summary.json", "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
    return out


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def sweep_checks(res: ExperimentResult) -> dict:
    """Per-seed empirical properties aggregated by ``sweep``."""
    lsqr, reps = res.lsqr, res.rank_reports
    k_star = lsqr.k_star
    upto = [r for r in reps if k_star is None or r.k <= k_star]
    not_nb = [r for r in reps if not r.near_best]
    bounded = [r for r in reps if r.max_count_allowed is not None]
    rise = None
    if lsqr.err_norms is not None and k_star is not None:
        err = lsqr.err_norms
        rise = bool(np.any(err[k_star:k_star + 10] >= 1.1 * err[k_star - 1]))
    return {
        "seed": res.problem.spec.seed if res.problem.spec is not None else None,
        "k_star": k_star,
        "k0_oracle": res.picard.k0_oracle,
        "kstar_le_k0": None if k_star is None or res.picard.k0_oracle is None else k_star <= res.picard.k0_oracle,
        "interlaced_upto_kstar": all(r.interlaced for r in upto),
        "not_near_best_rows": len(not_nb),
        "not_near_best_with_small_ritz": sum(r.count_below >= 1 for r in not_nb),
        "count_below_within_bound": all(r.count_below <= r.max_count_allowed for r in bounded),
        "error_rises_10pct": rise,
        "mean_count_below": float(np.mean([r.count_below for r in reps])) if reps else math.nan,
        "invariants_ok": res.ok,
    }
