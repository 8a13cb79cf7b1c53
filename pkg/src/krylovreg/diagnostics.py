"""Accuracy of the Krylov rank-k approximation and placement of Ritz values.

Notation follows the rest of the package: ``sigma`` is the vector of
distinct singular values (1-based in docstrings, 0-based in code), ``gamma_k``
is ``||A' - P_{k+1} B_k Q_k^T||`` and ``theta`` are the singular values of
``B_k`` in decreasing order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, svds

from .bidiag import BidiagState, form_Bk
from .problem_gen import SpectrumSpec
from .svd_oracle import CompactSVD, ReorganizedSVD

__all__ = [
    "RankKReport",
    "SubspaceReport",
    "BoundsReport",
    "DeltaResult",
    "CkResult",
    "InconsistencyError",
    "gamma_trailing",
    "gamma_sequence",
    "gamma_dense",
    "ritz_report",
    "max_count_allowed",
    "delta_k",
    "sin_theta_direct",
    "rayleigh_check",
    "subspace_report",
    "lagrange_values",
    "bounds_report",
    "build_Ck",
    "ck_regime",
    "GOLDEN_RHO",
    "INTERLACE_RHO",
    "TABLE1_CSV_HEADER",
]

GOLDEN_RHO = (1 + math.sqrt(5)) / 2
INTERLACE_RHO = 1 + math.sqrt(6) / 2
XI_CAP = math.sqrt(5) / 2

TABLE1_CSV_HEADER = (
    "k",
    "gamma_k",
    "interval_lo_idx",
    "interval_hi_idx",
    "closer_to",
    "near_best",
    "count_below",
    "max_count_allowed",
    "attained",
)


class InconsistencyError(RuntimeError):
    """A computed quantity contradicts an unconditional identity."""


# ---------------------------------------------------------------------------
# gamma_k


def gamma_trailing(state: BidiagState, k: int) -> float:
    """``gamma_k`` as the 2-norm of the trailing block of ``B_s``.

    Once the bidiagonalization has run to termination (step ``s``),
    ``gamma_k`` equals the largest singular value of the bottom-right
    ``(s-k+1) x (s-k)`` block of ``B_s``. That block is lower bidiagonal, so
    its Gram matrix is tridiagonal and only the top eigenvalue is needed.
    """
    if not state.terminated:
        raise ValueError("gamma_trailing needs a bidiagonalization run to termination")
    s = state.k
    if not 0 <= k <= s - 1:
        raise ValueError(f"k must lie in [0, {s - 1}], got {k}")
    a = state.alphas[k:s]
    bsub = state.betas[k + 1:s + 1]
    d = a**2 + bsub**2
    if d.size == 1:
        return float(math.sqrt(d[0]))
    e = bsub[:-1] * a[1:]
    top = scipy.linalg.eigvalsh_tridiagonal(
        d, e, select="i", select_range=(d.size - 1, d.size - 1)
    )
    return float(math.sqrt(max(top[0], 0.0)))


def gamma_sequence(state: BidiagState, kmax: Optional[int] = None) -> np.ndarray:
    """``gamma_1 .. gamma_kmax`` from the trailing blocks (default up to ``s-1``)."""
    kmax = state.k - 1 if kmax is None else min(kmax, state.k - 1)
    return np.array([gamma_trailing(state, k) for k in range(1, kmax + 1)])


def gamma_dense(Aprime, state: BidiagState, k: int, dense_limit: int = 1000) -> float:
    """``||A' - P_{k+1} B_k Q_k^T||`` computed from the explicit difference.

    Uses a full dense 2-norm for ``n <= dense_limit`` and an iterative
    largest-singular-value solver on the difference operator otherwise.
    ``k = 0`` returns ``||A'||``.
    """
    Aprime = np.asarray(Aprime, dtype=float)
    if not 0 <= k <= state.k:
        raise ValueError(f"k must lie in [0, {state.k}], got {k}")
    if k == 0:
        D = Aprime
    else:
        D = Aprime - state.P[:, :k + 1] @ form_Bk(state, k) @ state.Q[:, :k].T
    if D.shape[1] <= dense_limit:
        return float(np.linalg.norm(D, 2))
    op = LinearOperator(D.shape, matvec=lambda x: D @ x, rmatvec=lambda y: D.T @ y, dtype=float)
    return float(svds(op, k=1, tol=1e-10, return_singular_vectors=False)[0])


# ---------------------------------------------------------------------------
# Ritz values against the spectrum


@dataclass
class RankKReport:
    k: int
    gamma_k: float
    sigma_kplus1: float
    near_best: bool
    location: int  # j with gamma_k in [sigma_{j+1}, sigma_j]; 0 if gamma_k >= sigma_1
    closer_to: int  # j or j+1
    location_flagged: bool
    theta: np.ndarray
    count_below: int
    max_count_allowed: Optional[int]  # None: not bounded by the theorem
    interlaced: bool
    sigma_minus_theta_ok: bool

    @property
    def attained(self) -> Optional[bool]:
        if self.max_count_allowed is None:
            return None
        return self.count_below == self.max_count_allowed

    @property
    def bound_label(self) -> str:
        if self.max_count_allowed is None:
            return "not bounded by theorem"
        return str(self.max_count_allowed)

    def row(self):
        return (
            self.k,
            self.gamma_k,
            self.location + 1,
            self.location,
            self.closer_to,
            self.near_best,
            self.count_below,
            self.bound_label,
            "" if self.attained is None else self.attained,
        )

    def describe(self) -> str:
        j = self.location
        return (
            f"gamma_{self.k} in (sigma_{j + 1}, sigma_{j}) closer to sigma_{self.closer_to}"
        )


def max_count_allowed(k: int, j: int, closer_to_upper: bool) -> Optional[int]:
    """Upper bound on ``#{theta_i < sigma_{k+1}}`` for power-law spectra with ``alpha <= 1``.

    ``j`` locates ``gamma_k`` in ``[sigma_{j+1}, sigma_j]``;
    ``closer_to_upper`` means closer to ``sigma_j``. Returns None when the
    bound's side conditions fail.
    """
    if j < 1:
        return None
    if not closer_to_upper:
        return k - j + 1 if j * (j + 1) >= k else None
    if j == 1:
        return k
    return k - j + 2 if j * (j + 1) > k else None


def ritz_report(
    state: BidiagState,
    k: int,
    sigma_distinct,
    gamma: Optional[float] = None,
    consistency_tol: float = 1e-10,
    ritz_tol: float = 1e-12,
) -> RankKReport:
    """Classify the rank-k approximation and its Ritz values.

    ``gamma`` defaults to :func:`gamma_trailing`, which needs a terminated
    state. Raises :class:`InconsistencyError` if ``gamma_k`` falls below
    ``sigma_{k+1}`` by more than ``consistency_tol * sigma_1``.

    Ritz values that have converged agree with ``sigma_i`` to rounding
    error, so every comparison between a Ritz value and a singular value
    treats differences below ``ritz_tol * sigma_1`` as ties that do not
    break interlacing and do not count as "below ``sigma_{k+1}``".
    """
    sig = np.asarray(sigma_distinct, dtype=float)
    s = sig.size
    if not 1 <= k <= min(state.k, s - 1):
        raise ValueError(f"k must lie in [1, {min(state.k, s - 1)}], got {k}")
    if gamma is None:
        gamma = gamma_trailing(state, k)
    sk, sk1 = sig[k - 1], sig[k]
    if gamma < sk1 - consistency_tol * sig[0]:
        raise InconsistencyError(
            f"gamma_{k} = {gamma:.17g} is below sigma_{k + 1} = {sk1:.17g}"
        )
    theta = np.linalg.svd(form_Bk(state, k), compute_uv=False)

    # gamma may sit a rounding error below sigma_{k+1}; that still counts as near best
    near_best = bool(gamma < 0.5 * (sk + sk1))
    # j = number of singular values >= gamma, clamped so gamma is never placed below sigma_{k+1}
    j = min(int(np.count_nonzero(sig >= gamma)), k)
    flagged = j == 0
    if j == 0:
        closer_upper = True
        closer_to = 1
    else:
        mid = 0.5 * (sig[j - 1] + sig[j])
        closer_upper = gamma > mid
        closer_to = j if closer_upper else j + 1

    slack = ritz_tol * sig[0]
    count_below = int(np.count_nonzero(theta < sk1 - slack))
    interlaced = bool(
        np.all(theta < sig[:k] + slack) and np.all(theta > sig[1:k + 1] - slack)
    )
    ok = bool(np.all(sig[:k] - theta <= gamma + consistency_tol * sig[0]))
    return RankKReport(
        k=k,
        gamma_k=float(gamma),
        sigma_kplus1=float(sk1),
        near_best=near_best,
        location=j,
        closer_to=closer_to,
        location_flagged=flagged,
        theta=theta,
        count_below=count_below,
        max_count_allowed=max_count_allowed(k, j, closer_upper),
        interlaced=interlaced,
        sigma_minus_theta_ok=ok,
    )


# ---------------------------------------------------------------------------
# Krylov subspace versus the dominant right singular subspace


@dataclass
class DeltaResult:
    matrix: np.ndarray  # (s-k) x k
    norm: float
    flagged: bool
    backward_error: Optional[float]
    method: str


def _lagrange_table(x_nodes: np.ndarray, x_eval: np.ndarray):
    """Log-magnitudes and signs of the Lagrange basis ``L_j(x)`` on ``x_nodes``."""
    k = x_nodes.size
    logmag = np.zeros((x_eval.size, k))
    sign = np.ones((x_eval.size, k))
    for j in range(k):
        others = np.delete(x_nodes, j)
        num = x_eval[:, None] - others[None, :]
        den = x_nodes[j] - others
        with np.errstate(divide="ignore"):
            logmag[:, j] = np.sum(np.log(np.abs(num)), axis=1) - np.sum(np.log(np.abs(den)))
        sign[:, j] = np.prod(np.sign(num), axis=1) * np.prod(np.sign(den))
    return logmag, sign


def delta_k(
    reorg: ReorganizedSVD,
    b,
    k: int,
    method: str = "lagrange",
    k_cap: int = 20,
    backward_tol: float = 1e-8,
) -> DeltaResult:
    """The matrix ``Delta_k = D_2 T_{k2} T_{k1}^{-1} D_1^{-1}``.

    ``D = diag(sigma_i u_i^T b)`` and ``T`` has rows
    ``(1, sigma_i^2, ..., sigma_i^{2k-2})``; the first ``k`` rows form
    ``D_1, T_{k1}``. The span of ``[I; Delta_k]`` in the right singular basis
    is the Krylov subspace, so ``||Delta_k||`` is the tangent of its largest
    angle with the dominant right singular subspace.

    ``method="lagrange"`` evaluates ``T_{k2} T_{k1}^{-1}`` entrywise as the
    Lagrange basis polynomials on the nodes ``sigma_1^2..sigma_k^2`` evaluated
    at ``sigma_i^2`` (log-space products, no linear solve).
    ``method="qr"`` solves the Vandermonde system by column-equilibrated QR;
    the result is flagged when ``k > k_cap`` or the backward error exceeds
    ``backward_tol``.
    """
    s = reorg.s
    if not 1 <= k <= s - 1:
        raise ValueError(f"k must lie in [1, {s - 1}], got {k}")
    sig = reorg.sigma_distinct
    c = reorg.coefficients(b)
    d = sig * c
    x = sig**2
    if method == "lagrange":
        logmag, sgn = _lagrange_table(x[:k], x[k:])
        logscale = np.log(np.abs(d[k:]))[:, None] - np.log(np.abs(d[:k]))[None, :]
        scale_sign = np.sign(d[k:])[:, None] * np.sign(d[:k])[None, :]
        M = sgn * scale_sign * np.exp(logmag + logscale)
        return DeltaResult(M, float(np.linalg.norm(M, 2)), False, None, method)
    if method != "qr":
        raise ValueError(f"unknown method {method!r}")

    powers = np.arange(k)
    T1 = x[:k, None] ** powers[None, :]
    T2 = x[k:, None] ** powers[None, :]
    # X T1 = T2  <=>  T1^T X^T = T2^T
    M = T1.T
    colscale = np.linalg.norm(M, axis=0)
    Qf, Rf = np.linalg.qr(M / colscale)
    Y = scipy.linalg.solve_triangular(Rf, Qf.T @ T2.T)
    Xt = Y / colscale[:, None]
    X = Xt.T
    resid = np.linalg.norm(T1.T @ Xt - T2.T)
    denom = np.linalg.norm(T1) * np.linalg.norm(Xt) + np.linalg.norm(T2)
    berr = float(resid / denom) if denom > 0 else 0.0
    Delta = d[k:, None] * X / d[None, :k]
    flagged = k > k_cap or berr > backward_tol or not np.all(np.isfinite(Delta))
    norm = float(np.linalg.norm(Delta, 2)) if np.all(np.isfinite(Delta)) else float("inf")
    return DeltaResult(Delta, norm, flagged, berr, method)


def _check_orthonormal(Q: np.ndarray, tol: float = 1e-10):
    err = np.linalg.norm(Q.T @ Q - np.eye(Q.shape[1]), 2)
    if err > tol:
        raise ValueError(f"Q_k is not orthonormal (||Q^T Q - I|| = {err:.3g}); run with reorth")


def _complement_projection(reorg: ReorganizedSVD, Qk: np.ndarray) -> np.ndarray:
    k = Qk.shape[1]
    W = np.hstack([reorg.Vs[:, k:], reorg.V_perp_basis])
    return W.T @ Qk


def sin_theta_direct(reorg: ReorganizedSVD, Qk) -> float:
    """Largest sine between ``span(Q_k)`` and ``span(v_1..v_k)``.

    Computed as ``||(V_k^perp, V_perp)^T Q_k||`` from the complement basis,
    which stays accurate for small angles.
    """
    Qk = np.asarray(Qk, dtype=float)
    _check_orthonormal(Qk)
    M = _complement_projection(reorg, Qk)
    if M.size == 0:
        return 0.0  # Q_k spans the whole space
    return float(np.linalg.svd(M, compute_uv=False)[0])


@dataclass
class SubspaceReport:
    k: int
    delta_norm: Optional[float] = None
    sin_theta: Optional[float] = None
    sin_theta_direct: Optional[float] = None
    tan_theta: Optional[float] = None
    epsilon_k: Optional[float] = None
    rayleigh_value: Optional[float] = None
    lower: Optional[float] = None
    upper: Optional[float] = None
    lower_margin: Optional[float] = None
    upper_margin: Optional[float] = None
    lower_strict: Optional[bool] = None
    upper_strict: Optional[bool] = None
    bounds_hold: Optional[bool] = None
    est1_applies: Optional[bool] = None
    est1_holds: Optional[bool] = None
    delta_flagged: bool = False
    q_tilde: Optional[np.ndarray] = field(default=None, repr=False)

    FIELDS = (
        "k", "delta_norm", "sin_theta", "sin_theta_direct", "tan_theta", "epsilon_k",
        "rayleigh_value", "lower", "upper", "bounds_hold", "delta_flagged",
    )

    def row(self):
        return tuple(getattr(self, f) for f in self.FIELDS)


def rayleigh_check(
    Aprime,
    reorg: ReorganizedSVD,
    Qk,
    sigma_distinct,
    k: int,
    slack: float = 1e-10,
) -> SubspaceReport:
    """Rayleigh quotient of ``A'^T A'`` at the Krylov vector nearest the complement.

    ``q~ = Q_k c_k`` with ``c_k`` the top right singular vector of
    ``(V_k^perp, V_perp)^T Q_k``; ``epsilon_k = ||V_k^T q~||``. The bounds are
    ``eps^2 sigma_k^2 + (1-eps^2) sigma_s^2`` below and
    ``(1-eps^2) sigma_{k+1}^2 + eps^2 sigma_1^2`` above, both strict.
    ``Aprime=None`` evaluates the quotient from the singular basis.

    The strict flags come from ``lower_margin`` and ``upper_margin``, which
    are written as sums of nonnegative terms in the weights ``v_i^T q~``.
    Near ``k = s-1`` the true margin can sit far below the rounding error of
    the quotient itself, and subtracting two computed numbers would then
    decide strictness by noise.
    """
    Qk = np.asarray(Qk, dtype=float)
    _check_orthonormal(Qk)
    sig = np.asarray(sigma_distinct, dtype=float)
    s = sig.size
    if not 1 <= k <= s - 1 or Qk.shape[1] != k:
        raise ValueError(f"need 1 <= k <= {s - 1} and Q_k with k columns")
    M = _complement_projection(reorg, Qk)
    _, svals, Vh = np.linalg.svd(M)
    q = Qk @ Vh[0]
    sin_d = float(svals[0])
    w2 = (reorg.Vs.T @ q) ** 2
    w_perp2 = float(np.sum((reorg.V_perp_basis.T @ q) ** 2))
    eps = float(np.sqrt(np.sum(w2[:k])))
    if Aprime is None:
        value = float(np.sum(sig**2 * w2))
    else:
        w = np.asarray(Aprime) @ q
        value = float(w @ w)
    s2 = sig**2
    e2 = eps * eps
    lower = e2 * s2[k - 1] + (1 - e2) * s2[-1]
    upper = (1 - e2) * s2[k] + e2 * s2[0]
    lower_margin = float(
        np.sum((s2[:k] - s2[k - 1]) * w2[:k]) + np.sum((s2[k:] - s2[-1]) * w2[k:]) - s2[-1] * w_perp2
    )
    upper_margin = float(
        np.sum((s2[0] - s2[:k]) * w2[:k]) + np.sum((s2[k] - s2[k:]) * w2[k:]) + s2[k] * w_perp2
    )
    tol = slack * sig[0] ** 2
    applies = eps >= sig[k] / sig[k - 1]
    return SubspaceReport(
        k=k,
        sin_theta_direct=sin_d,
        epsilon_k=eps,
        rayleigh_value=value,
        lower=lower,
        upper=upper,
        lower_margin=lower_margin,
        upper_margin=upper_margin,
        lower_strict=lower_margin > 0,
        upper_strict=upper_margin > 0,
        bounds_hold=(value - lower > -tol) and (upper - value > -tol),
        est1_applies=bool(applies),
        est1_holds=bool(math.sqrt(value) > sig[k]) if applies else None,
        q_tilde=q,
    )


def subspace_report(
    reorg: ReorganizedSVD,
    b,
    state: BidiagState,
    k: int,
    Aprime=None,
    delta_method: str = "lagrange",
) -> SubspaceReport:
    """Both routes to ``||sin Theta||`` plus the Rayleigh-quotient bounds."""
    rep = rayleigh_check(Aprime, reorg, state.Q[:, :k], reorg.sigma_distinct, k)
    dres = delta_k(reorg, b, k, method=delta_method)
    rep.delta_norm = dres.norm
    rep.delta_flagged = dres.flagged
    rep.tan_theta = dres.norm
    rep.sin_theta = dres.norm / math.sqrt(1.0 + dres.norm**2) if math.isfinite(dres.norm) else 1.0
    return rep


# ---------------------------------------------------------------------------
# Lagrange quantities and the a-priori bounds


def lagrange_values(sigma_distinct, k: int):
    """``|L_j^(k)(0)| = prod_{i != j} sigma_i^2 / |sigma_j^2 - sigma_i^2|``, j = 1..k.

    Products are accumulated as sums of logarithms. Returns ``(values, max)``.
    """
    sig = np.asarray(sigma_distinct, dtype=float)
    if not 1 <= k <= sig.size:
        raise ValueError(f"k must lie in [1, {sig.size}], got {k}")
    x = sig[:k] ** 2
    if np.unique(x).size != k:
        raise ValueError("the first k singular values must be distinct")
    logs = np.empty(k)
    for j in range(k):
        others = np.delete(x, j)
        logs[j] = np.sum(np.log(others)) - np.sum(np.log(np.abs(x[j] - others)))
    vals = np.exp(logs)
    return vals, float(vals.max())


@dataclass
class BoundsReport:
    k: int
    kind: str
    L_values: np.ndarray
    L_max: float
    delta_norm: float
    delta_flagged: bool
    xi_k: float
    xi_fallback: bool
    eta_k_bound: Optional[float]
    delta_bound: Optional[float]
    delta_bound_alt: Optional[float]
    delta_bound_flagged: bool
    cond_near_best: Optional[bool]
    cond_interlace: Optional[bool]
    cond_near_best_eta: Optional[bool]
    leading_order: bool = True

    FIELDS = (
        "k", "kind", "L_max", "delta_norm", "xi_k", "eta_k_bound", "delta_bound",
        "delta_bound_alt", "cond_near_best", "cond_interlace", "cond_near_best_eta",
    )

    def row(self):
        return tuple(getattr(self, f) for f in self.FIELDS)


def _xi(delta_norm: float, flagged: bool):
    if flagged or not math.isfinite(delta_norm) or delta_norm >= 1:
        return XI_CAP, True
    t = delta_norm / (1 + delta_norm**2)
    return math.sqrt(t * t + 1), False


def bounds_report(reorg: ReorganizedSVD, b, k: int, spectrum: SpectrumSpec) -> BoundsReport:
    """Evaluate the a-priori bounds at step ``k`` (leading order).

    Every ``1 + O(rho^-2)`` factor is replaced by 1. The bounds on
    ``||Delta_1||`` are printed with a ``min`` over the trailing coefficients
    in one place and a ``max`` elsewhere; both readings are evaluated, the
    looser is reported in ``delta_bound`` and the other in
    ``delta_bound_alt`` with ``delta_bound_flagged`` set.
    """
    sig = reorg.sigma_distinct
    s = reorg.s
    if not 1 <= k <= s - 1:
        raise ValueError(f"k must lie in [1, {s - 1}], got {k}")
    c = np.abs(reorg.coefficients(b))
    head_min = float(c[:k].min())
    tail_max = float(c[k:].max())
    tail_min = float(c[k:].min())
    ratio = tail_max / head_min
    Lv, Lmax = lagrange_values(sig, k)
    dres = delta_k(reorg, b, k)
    xi, fallback = _xi(dres.norm, dres.flagged)
    grow = sig[k - 1] / sig[k]

    eta = dbound = dalt = None
    flagged = False
    near = inter = near_eta = None
    if spectrum.kind == "severe":
        eta = xi * ratio
        if k == 1:
            a = sig[1] / sig[0] * tail_max / c[0]
            b_ = sig[1] / sig[0] * tail_min / c[0]
            dbound, dalt, flagged = max(a, b_), min(a, b_), True
        else:
            dbound = sig[k] / sig[k - 1] * ratio * Lmax
        near = spectrum.rho > GOLDEN_RHO
        inter = spectrum.rho >= INTERLACE_RHO
    elif spectrum.kind == "power":
        al = spectrum.alpha
        if al > 0.5:
            if k == 1:
                root = math.sqrt(1 / (2 * al - 1))
                eta = xi * grow * tail_max / c[0] * root
                a = tail_max / c[0] * root
                b_ = tail_min / c[0] * root
                dbound, dalt, flagged = max(a, b_), min(a, b_), True
            else:
                root = math.sqrt(k * k / (4 * al * al - 1) + k / (2 * al - 1))
                eta = xi * grow * ratio * root * Lmax
                dbound = ratio * root * Lmax
            rhs = ((k + 1) / k) ** al
            near = 2 * math.sqrt(1 + eta * eta) - 1 < rhs
            inter = 1 + math.sqrt(1 + eta * eta) < rhs
    if eta is not None:
        near_eta = math.sqrt(1 + eta * eta) < 0.5 * grow + 0.5
    return BoundsReport(
        k=k,
        kind=spectrum.kind,
        L_values=Lv,
        L_max=Lmax,
        delta_norm=dres.norm,
        delta_flagged=dres.flagged,
        xi_k=xi,
        xi_fallback=fallback,
        eta_k_bound=eta,
        delta_bound=dbound,
        delta_bound_alt=dalt,
        delta_bound_flagged=flagged,
        cond_near_best=near,
        cond_interlace=inter,
        cond_near_best_eta=near_eta,
    )


# ---------------------------------------------------------------------------
# an explicit family of best / near-best rank-k approximations


@dataclass
class CkResult:
    C: np.ndarray
    distance: float
    smallest_sv: float
    expected_distance: float
    expected_smallest_sv: float
    regime: str  # "inter" or "misinter"

    @property
    def closed_form_holds(self) -> bool:
        scale = max(self.expected_distance, self.expected_smallest_sv, 1.0)
        return (
            abs(self.distance - self.expected_distance) <= 1e-10 * scale
            and abs(self.smallest_sv - self.expected_smallest_sv) <= 1e-10 * scale
        )


def build_Ck(svd: CompactSVD, k: int, theta: float, j: int, eps: float = 0.0) -> CkResult:
    """``C_k = A_k - sigma_{k+1} U_k diag(d) V_k^T`` with ``d = theta (1+eps)`` except ``d_j = 1+eps``.

    ``||A - C_k|| = (1+eps) sigma_{k+1}``. The smallest nonzero singular
    value of ``C_k`` is ``sigma_k - theta (1+eps) sigma_{k+1}`` provided the
    slot-``j`` value ``sigma_j - (1+eps) sigma_{k+1}`` is not smaller; both
    quantities are measured here and returned next to their closed forms.
    """
    sig = np.asarray(svd.sigma, dtype=float)
    if not 2 <= k <= sig.size - 1:
        raise ValueError(f"k must lie in [2, {sig.size - 1}], got {k}")
    if not 1 <= j <= k - 1:
        raise ValueError(f"j must lie in [1, {k - 1}], got {j}")
    if not 0 <= theta <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    sk, sk1 = sig[k - 1], sig[k]
    if not (1 + eps) * sk1 < 0.5 * (sk + sk1):
        raise ValueError(
            f"(1+eps) sigma_{{k+1}} = {(1 + eps) * sk1:.6g} is not below "
            f"(sigma_k + sigma_{{k+1}})/2 = {0.5 * (sk + sk1):.6g}"
        )
    d = np.full(k, theta * (1 + eps))
    d[j - 1] = 1 + eps
    Uk, Vk = svd.U[:, :k], svd.V[:, :k]
    C = (Uk * (sig[:k] - sk1 * d)) @ Vk.T
    A = svd.matrix()
    distance = float(np.linalg.norm(A - C, 2))
    svals = np.linalg.svd(C, compute_uv=False)
    expected_small = sk - theta * (1 + eps) * sk1
    return CkResult(
        C=C,
        distance=distance,
        smallest_sv=float(svals[k - 1]),
        expected_distance=(1 + eps) * sk1,
        expected_smallest_sv=float(expected_small),
        regime="inter" if expected_small > sk1 else "misinter",
    )


def ck_regime(k: int, alpha: float, theta: float, eps: float = 0.0) -> str:
    """Regime predicted for ``sigma_i = zeta i^-alpha`` from the sign of
    ``((k+1)/k)^alpha - theta (1+eps) - 1``."""
    return "inter" if ((k + 1) / k) ** alpha - theta * (1 + eps) - 1 > 0 else "misinter"
