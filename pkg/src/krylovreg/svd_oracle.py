"""Dense SVD ground truth for the regularization experiments.

The key object is :class:`ReorganizedSVD`: within each group of equal
singular values, ``b`` is projected onto the left singular subspace and
normalised, which yields one left vector ``u_i`` carrying all of ``b``'s
component in that subspace. The matrix ``A' = Us diag(sigma_distinct) Vs^T``
built from these vectors has only simple nonzero singular values, yet TSVD,
Tikhonov and Krylov methods behave on it exactly as on ``A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .problem_gen import DistinctGroup, TestProblem, group_distinct

__all__ = [
    "CompactSVD",
    "ReorganizedSVD",
    "PicardReport",
    "compute_svd",
    "reorganize",
    "tsvd_solution",
    "tsvd_solution_grouped",
    "tikhonov_solution",
    "tikhonov_optimal",
    "tsvd_error_table",
    "transition_points",
    "fit_picard_beta",
    "PICARD_CSV_HEADER",
]

PICARD_CSV_HEADER = ("k", "sigma_k", "abs_uTb", "abs_uTbtrue", "tsvd_err", "tsvd_res")


@dataclass
class CompactSVD:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @classmethod
    def from_problem(cls, problem: TestProblem) -> "CompactSVD":
        """The exact generating factors of a synthetic problem."""
        return cls(problem.U, problem.sigma, problem.V)

    def matrix(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


def compute_svd(A) -> CompactSVD:
    """Compact SVD of a tall matrix with singular values sorted nonincreasing."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    m, n = A.shape
    if m < n:
        raise ValueError(f"require m >= n, got shape {A.shape}")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return CompactSVD(U, s, Vt.T)


@dataclass
class ReorganizedSVD:
    """The SVD of ``A`` rearranged around the right-hand side ``b``.

    Attributes
    ----------
    s : int
        Number of distinct singular values that ``b`` actually touches.
    sigma_distinct : ndarray, shape (s,)
    Us, Vs : ndarray, shapes (m, s) and (n, s)
        ``Us[:, i]`` is the normalised projection of ``b`` onto the i-th left
        singular subspace; ``Vs[:, i] = A^T Us[:, i] / sigma_i``.
    U_perp_basis, V_perp_basis : ndarray
        Orthonormal completions inside the singular subspaces (plus whole
        groups ``b`` does not touch); ``U_perp_basis^T b = 0``.
    dropped : list of int
        Indices (into the original group list) of groups removed because
        ``b`` has no component in them.
    """

    s: int
    sigma_distinct: np.ndarray
    Us: np.ndarray
    Vs: np.ndarray
    U_perp_basis: np.ndarray
    V_perp_basis: np.ndarray
    multiplicities: np.ndarray
    dropped: list = field(default_factory=list)
    beta_fit: Optional[float] = None

    @property
    def V_full(self) -> np.ndarray:
        return np.hstack([self.Vs, self.V_perp_basis])

    @property
    def reduced(self) -> bool:
        return bool(self.dropped)

    def aprime(self) -> np.ndarray:
        """Assemble ``A' = Us diag(sigma_distinct) Vs^T``."""
        return (self.Us * self.sigma_distinct) @ self.Vs.T

    def coefficients(self, b) -> np.ndarray:
        """``u_i^T b`` for every distinct value."""
        return self.Us.T @ np.asarray(b, dtype=float)


def _householder_completion(c: np.ndarray) -> np.ndarray:
    """Orthogonal matrix whose first column is the unit vector ``c``."""
    d = c.size
    w = c.copy()
    w[0] -= 1.0
    nw = np.linalg.norm(w)
    if nw < 1e-15:
        return np.eye(d)
    w /= nw
    return np.eye(d) - 2.0 * np.outer(w, w)


def reorganize(svd: CompactSVD, b, groups: Optional[Sequence] = None, drop_tol: float = 1e-14) -> ReorganizedSVD:
    """Rebuild the singular vector bases around ``b``.

    Parameters
    ----------
    svd : CompactSVD
    b : array_like
    groups : sequence, optional
        Distinct-value groups, either :class:`DistinctGroup` objects or plain
        multiplicities. Defaults to exact-duplicate grouping of ``svd.sigma``.
    drop_tol : float
        A group is dropped (and reported) when ``||U_i^T b|| <= drop_tol*||b||``.
    """
    b = np.asarray(b, dtype=float)
    U, sigma, V = svd.U, np.asarray(svd.sigma, dtype=float), svd.V
    if groups is None:
        groups = group_distinct(sigma, 0.0)
    elif len(groups) and not isinstance(groups[0], DistinctGroup):
        counts = [int(c) for c in groups]
        if sum(counts) != sigma.size:
            raise ValueError(f"multiplicities sum to {sum(counts)}, expected {sigma.size}")
        start, built = 0, []
        for c in counts:
            built.append(DistinctGroup(float(np.mean(sigma[start:start + c])), c, start, start + c))
            start += c
        groups = built

    bnorm = np.linalg.norm(b)
    us, vs, svals, mults, u_perp, v_perp, dropped = [], [], [], [], [], [], []
    for gi, g in enumerate(groups):
        Ug = U[:, g.start:g.stop]
        Vg = V[:, g.start:g.stop]
        proj = Ug.T @ b
        pn = np.linalg.norm(proj)
        if pn <= drop_tol * bnorm:
            dropped.append(gi)
            u_perp.append(Ug)
            v_perp.append(Vg)
            continue
        c = proj / pn
        us.append(Ug @ c)
        vs.append(Vg @ c)
        svals.append(g.value)
        mults.append(g.multiplicity)
        if g.multiplicity > 1:
            H = _householder_completion(c)
            u_perp.append(Ug @ H[:, 1:])
            v_perp.append(Vg @ H[:, 1:])

    m, n = U.shape[0], V.shape[0]
    return ReorganizedSVD(
        s=len(svals),
        sigma_distinct=np.array(svals),
        Us=np.column_stack(us) if us else np.zeros((m, 0)),
        Vs=np.column_stack(vs) if vs else np.zeros((n, 0)),
        U_perp_basis=np.hstack(u_perp) if u_perp else np.zeros((m, 0)),
        V_perp_basis=np.hstack(v_perp) if v_perp else np.zeros((n, 0)),
        multiplicities=np.array(mults, dtype=int),
        dropped=dropped,
    )


def tsvd_solution(reorg: ReorganizedSVD, b, k: int) -> np.ndarray:
    """TSVD solution keeping the ``k`` largest distinct SVD components."""
    if not 1 <= k <= reorg.s:
        raise ValueError(f"k must lie in [1, {reorg.s}], got {k}")
    coef = reorg.coefficients(b)[:k] / reorg.sigma_distinct[:k]
    return reorg.Vs[:, :k] @ coef


def tsvd_solution_grouped(svd: CompactSVD, groups: Sequence[DistinctGroup], b, k: int) -> np.ndarray:
    """TSVD solution from the original grouped factors, ``sum V_i U_i^T b / sigma_i``."""
    if not 1 <= k <= len(groups):
        raise ValueError(f"k must lie in [1, {len(groups)}], got {k}")
    b = np.asarray(b, dtype=float)
    stop = groups[k - 1].stop
    return svd.V[:, :stop] @ ((svd.U[:, :stop].T @ b) / svd.sigma[:stop])


def tikhonov_solution(reorg: ReorganizedSVD, b, lam: float) -> np.ndarray:
    """Standard-form Tikhonov solution as a filtered expansion.

    The filters are ``sigma_i**2 / (sigma_i**2 + lam**2)``.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    sig = reorg.sigma_distinct
    coef = reorg.coefficients(b)
    # f_i * c_i / sigma_i written without forming c_i / sigma_i
    return reorg.Vs @ (sig * coef / (sig**2 + lam**2))


def tsvd_error_table(reorg: ReorganizedSVD, b, x_true=None):
    """Per-k TSVD error and residual norms for k = 1..s.

    Evaluated in the singular basis with cumulative sums, so a full sweep
    costs a handful of matrix-vector products.

    Returns
    -------
    err : ndarray or None
        ``||x_k - x_true||``; None without ``x_true``.
    res : ndarray
        ``||A' x_k - b||`` (equal to ``||A x_k - b||``).
    """
    b = np.asarray(b, dtype=float)
    c = reorg.coefficients(b)
    outside = b - reorg.Us @ c
    out2 = float(outside @ outside)
    c2 = c**2
    tail = np.concatenate([np.cumsum(c2[::-1])[::-1][1:], [0.0]])
    res = np.sqrt(tail + out2)
    if x_true is None:
        return None, res
    x_true = np.asarray(x_true, dtype=float)
    t = reorg.Vs.T @ x_true
    perp2 = float(np.sum((reorg.V_perp_basis.T @ x_true) ** 2))
    # on severe spectra the naive coefficients overflow; those errors are reported as inf
    with np.errstate(over="ignore"):
        head = np.cumsum((c / reorg.sigma_distinct - t) ** 2)
    t2 = t**2
    rest = np.concatenate([np.cumsum(t2[::-1])[::-1][1:], [0.0]])
    err = np.sqrt(head + rest + perp2)
    return err, res


def tikhonov_optimal(reorg: ReorganizedSVD, b, x_true, bracket=None):
    """Oracle Tikhonov parameter minimising ``||x_lambda - x_true||``.

    The default search interval is ``[sigma_s / 100, sigma_1]``. Its lower
    end sits below ``sigma_s`` because on weakly noisy problems the optimum
    can lie under the smallest singular value, where every filter factor is
    already close to one. A coarse logarithmic grid picks the starting
    cell and a bounded scalar search refines it.

    Returns ``(lambda_opt, error)``.
    """
    sig = reorg.sigma_distinct
    c = reorg.coefficients(b)
    x_true = np.asarray(x_true, dtype=float)
    t = reorg.Vs.T @ x_true
    perp2 = float(np.sum((reorg.V_perp_basis.T @ x_true) ** 2))

    def err(loglam):
        lam2 = math.exp(2 * loglam)
        d = sig * c / (sig**2 + lam2) - t
        return math.sqrt(float(d @ d) + perp2)

    lo, hi = bracket if bracket is not None else (sig[-1] / 100, sig[0])
    grid = np.linspace(math.log(lo), math.log(hi), 65)
    vals = [err(g) for g in grid]
    i = int(np.argmin(vals))
    a, b_ = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(err, bounds=(a, b_), method="bounded", options={"xatol": 1e-10})
    if res.fun > vals[i]:
        return math.exp(grid[i]), float(vals[i])
    return math.exp(res.x), float(res.fun)


def fit_picard_beta(sigma, coef, floor: float = 1e-12) -> Optional[float]:
    """Least-squares exponent of ``|coef_i| ~ sigma_i**(1+beta)`` (no intercept).

    Coefficients below ``floor * max|coef|`` sit at the rounding level of
    the data and are left out of the fit.
    """
    sigma = np.asarray(sigma, dtype=float)
    coef = np.abs(np.asarray(coef, dtype=float))
    cut = floor * coef.max() if coef.size else 0.0
    mask = (coef > cut) & (sigma > 0) & (sigma != 1.0)
    if mask.sum() == 0:
        return None
    ls = np.log(sigma[mask])
    lc = np.log(coef[mask])
    slope = float(ls @ lc / (ls @ ls))
    return slope - 1.0


@dataclass
class PicardReport:
    sigma: np.ndarray
    abs_uTb: np.ndarray
    abs_uTbtrue: Optional[np.ndarray]
    ratios: np.ndarray
    beta: Optional[float]
    eta_hat: float
    nu: float
    k0_oracle: Optional[int]
    k0_picard: int
    degenerate: bool
    tsvd_err: Optional[np.ndarray]
    tsvd_res: np.ndarray

    def rows(self):
        for i in range(self.sigma.size):
            yield (
                i + 1,
                self.sigma[i],
                self.abs_uTb[i],
                None if self.abs_uTbtrue is None else self.abs_uTbtrue[i],
                None if self.tsvd_err is None else self.tsvd_err[i],
                self.tsvd_res[i],
            )


def transition_points(
    reorg: ReorganizedSVD,
    b,
    x_true=None,
    eta_hat: Optional[float] = None,
    *,
    e=None,
    b_true=None,
    nu: float = 2.0,
) -> PicardReport:
    """Transition point diagnostics for TSVD.

    ``k0_oracle`` is the error-minimising truncation (needs ``x_true``; ties
    go to the smaller k). ``k0_picard`` is blind: the last index before the
    coefficients ``|u_k^T b|`` first drop to ``nu * eta_hat``. The noise
    estimate defaults to ``||e|| / sqrt(m)`` when the noise is known, else the
    median of ``|u_i^T b|`` over the last ``ceil(s/4)`` indices.
    """
    b = np.asarray(b, dtype=float)
    s = reorg.s
    c = np.abs(reorg.coefficients(b))
    if eta_hat is None:
        if e is not None:
            eta_hat = float(np.linalg.norm(e) / math.sqrt(b.size))
        else:
            eta_hat = float(np.median(c[-math.ceil(s / 4):]))
    below = np.nonzero(c <= nu * eta_hat)[0]
    k0_picard = int(below[0]) if below.size else s
    ctrue = None if b_true is None else np.abs(reorg.coefficients(b_true))
    beta = None if ctrue is None else fit_picard_beta(reorg.sigma_distinct, ctrue)
    reorg.beta_fit = beta
    err, res = tsvd_error_table(reorg, b, x_true)
    k0_oracle = None if err is None else int(np.argmin(err)) + 1
    return PicardReport(
        sigma=reorg.sigma_distinct.copy(),
        abs_uTb=c,
        abs_uTbtrue=ctrue,
        ratios=c / reorg.sigma_distinct,
        beta=beta,
        eta_hat=eta_hat,
        nu=nu,
        k0_oracle=k0_oracle,
        k0_picard=k0_picard,
        degenerate=k0_picard == 0,
        tsvd_err=err,
        tsvd_res=res,
    )
