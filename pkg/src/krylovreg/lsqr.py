"""LSQR iterates from a bidiagonalization, CGLS, and Ritz filter factors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bidiag import BidiagState

__all__ = [
    "LsqrRun",
    "FilterFactors",
    "run_lsqr",
    "run_cgls",
    "filter_factors",
    "ritz_values",
    "filtered_expansion",
    "LSQR_CSV_HEADER",
]

LSQR_CSV_HEADER = ("k", "res_norm", "sol_norm", "err_norm", "theta_min", "theta_max")


@dataclass
class LsqrRun:
    """Per-iteration LSQR history; index ``k-1`` holds iteration ``k``."""

    X: np.ndarray  # (n, kmax), column k-1 is x_k
    res_norms: np.ndarray
    sol_norms: np.ndarray
    err_norms: Optional[np.ndarray]
    theta_min: np.ndarray
    theta_max: np.ndarray
    k_star: Optional[int]
    k_dp: Optional[int]
    tau: float
    tie_tol: float = 0.0

    @property
    def kmax(self) -> int:
        return self.X.shape[1]

    def x(self, k: int) -> np.ndarray:
        return self.X[:, k - 1]

    @property
    def semi_convergent(self) -> bool:
        """Whether the error curve rises above its minimum after ``k_star``.

        Rises smaller than the tie tolerance (rounding level) do not count.
        """
        if self.err_norms is None or self.k_star is None:
            return False
        later = self.err_norms[self.k_star:]
        return bool(later.size) and float(later.max()) > self.err_norms[self.k_star - 1] + self.tie_tol

    def rows(self):
        for k in range(1, self.kmax + 1):
            yield (
                k,
                self.res_norms[k - 1],
                self.sol_norms[k - 1],
                None if self.err_norms is None else self.err_norms[k - 1],
                self.theta_min[k - 1],
                self.theta_max[k - 1],
            )

    def summary(self) -> dict:
        return {
            "k_star": self.k_star,
            "k_dp": self.k_dp,
            "tau": self.tau,
            "kmax": self.kmax,
            "semi_convergent": self.semi_convergent,
        }


def ritz_values(state: BidiagState, k: int) -> np.ndarray:
    """Singular values of ``B_k`` in decreasing order."""
    return np.linalg.svd(state.Bk(k), compute_uv=False)


def _givens(a: float, b: float):
    r = math.hypot(a, b)
    if r == 0.0:
        return 1.0, 0.0, 0.0
    return a / r, b / r, r


def run_lsqr(
    state: BidiagState,
    b=None,
    x_true=None,
    tau: float = 1.01,
    noise_norm: Optional[float] = None,
    kmax: Optional[int] = None,
    tie_rtol: float = 1e-12,
) -> LsqrRun:
    """LSQR iterates ``x_k = Q_k y_k`` for ``k = 1..kmax``.

    ``y_k`` minimises ``||B_k y - beta_1 e_1||``. The QR factorization of
    ``B_k`` is built incrementally with one Givens rotation per step, so
    ``R_k`` is upper bidiagonal and each ``y_k`` is a short back substitution.
    The residual norm is read off the rotated right-hand side.

    Parameters
    ----------
    state : BidiagState
    b : array_like, optional
        Only used for a consistency check of ``beta_1``.
    x_true : array_like, optional
        Enables the error curve and ``k_star``, the smallest ``k`` whose
        error is within ``tie_rtol * ||x_true||`` of the minimum. Without the
        tolerance a noise-free run would pick an arbitrary point on the
        rounding-level plateau its error curve ends on.
    tau : float
        Discrepancy factor; ``k_dp`` is the first ``k`` with
        ``||A x_k - b|| <= tau * noise_norm``.
    noise_norm : float, optional
        ``||e||``; without it ``k_dp`` is None.
    """
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    if b is not None and not math.isclose(np.linalg.norm(b), state.betas[0], rel_tol=1e-12):
        raise ValueError("b does not match the bidiagonalization's starting vector")
    K = state.k if kmax is None else min(kmax, state.k)
    n = state.Q.shape[0]
    alphas, betas = state.alphas, state.betas

    # incremental QR: R has diagonal rho and superdiagonal theta
    rho = np.zeros(K)
    sup = np.zeros(K)
    f = np.zeros(K)
    phibar = betas[0]
    rhobar = alphas[0]
    res = np.zeros(K)
    for j in range(K):
        c, s, rho[j] = _givens(rhobar, betas[j + 1])
        f[j] = c * phibar
        phibar = -s * phibar
        res[j] = abs(phibar)
        if j + 1 < K:
            sup[j] = s * alphas[j + 1]
            rhobar = c * alphas[j + 1]

    X = np.zeros((n, K))
    sol = np.zeros(K)
    tmin = np.zeros(K)
    tmax = np.zeros(K)
    for k in range(1, K + 1):
        y = np.zeros(k)
        y[k - 1] = f[k - 1] / rho[k - 1]
        for i in range(k - 2, -1, -1):
            y[i] = (f[i] - sup[i] * y[i + 1]) / rho[i]
        X[:, k - 1] = state.Q[:, :k] @ y
        sol[k - 1] = np.linalg.norm(y)
        th = ritz_values(state, k)
        tmax[k - 1], tmin[k - 1] = th[0], th[-1]

    err = None
    k_star = None
    tie = 0.0
    if x_true is not None:
        x_true = np.asarray(x_true, dtype=float)
        err = np.linalg.norm(X - x_true[:, None], axis=0)
        tie = tie_rtol * float(np.linalg.norm(x_true))
        k_star = int(np.nonzero(err <= err.min() + tie)[0][0]) + 1
    k_dp = None
    if noise_norm is not None:
        hit = np.nonzero(res <= tau * noise_norm)[0]
        k_dp = int(hit[0]) + 1 if hit.size else None
    return LsqrRun(X, res, sol, err, tmin, tmax, k_star, k_dp, tau, tie)


def run_cgls(A, b, kmax: int) -> np.ndarray:
    """CGLS iterates (CG on the normal equations from a zero start).

    Returns an ``(n, kmax)`` array whose column ``k-1`` is iterate ``k``.
    Stops early, repeating the last iterate, if the normal-equations residual
    vanishes.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if not 1 <= kmax <= n:
        raise ValueError(f"kmax must lie in [1, {n}], got {kmax}")
    x = np.zeros(n)
    r = b.copy()
    s = A.T @ r
    p = s.copy()
    gamma = s @ s
    gamma0 = gamma
    out = np.zeros((n, kmax))
    for k in range(kmax):
        if gamma <= (1e-30 * gamma0):
            out[:, k:] = x[:, None]
            break
        q = A @ p
        step = gamma / (q @ q)
        x = x + step * p
        r = r - step * q
        s = A.T @ r
        gamma_new = s @ s
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
        out[:, k] = x
    return out


@dataclass
class FilterFactors:
    k: int
    f: np.ndarray
    theta: np.ndarray


def filter_factors(theta, sigma_distinct) -> FilterFactors:
    """Ritz filter factors ``f_i = 1 - prod_j (theta_j^2 - sigma_i^2) / theta_j^2``.

    The factors ``1 - (sigma_i/theta_j)^2`` of each product are multiplied in
    order of increasing ``|theta_j^2 - sigma_i^2|`` so an exact (or nearly
    exact) match between a Ritz value and ``sigma_i`` zeroes the product
    first.
    """
    theta = np.sort(np.asarray(theta, dtype=float))[::-1]
    sigma = np.asarray(sigma_distinct, dtype=float)
    if np.any(theta <= 0):
        raise ValueError("Ritz values must be positive")
    f = np.empty(sigma.size)
    th2 = theta**2
    for i, si in enumerate(sigma):
        gap = th2 - si * si
        order = np.argsort(np.abs(gap))
        prod = 1.0
        for j in order:
            if gap[j] == 0.0:
                prod = 0.0
                break
            prod *= gap[j] / th2[j]
        f[i] = 1.0 - prod
    return FilterFactors(k=theta.size, f=f, theta=theta)


def filtered_expansion(reorg, b, f) -> np.ndarray:
    """``sum_i f_i (u_i^T b / sigma_i) v_i`` over the distinct SVD components."""
    c = reorg.coefficients(b)
    return reorg.Vs @ (np.asarray(f) * c / reorg.sigma_distinct)
