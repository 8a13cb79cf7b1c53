"""Golub-Kahan lower bidiagonalization with optional full reorthogonalization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["BidiagState", "run_bidiag", "form_Bk", "BIDIAG_CSV_HEADER"]

BIDIAG_CSV_HEADER = ("j", "alpha", "beta")


@dataclass(frozen=True)
class BidiagState:
    """Output of :func:`run_bidiag` after ``k`` complete steps.

    ``alphas[j-1]`` is alpha_j and ``betas[j-1]`` is beta_j, so
    ``betas[0] = ||b||`` and ``betas`` has ``k + 1`` entries. ``P`` has
    ``k + 1`` columns and ``Q`` has ``k``. ``alpha_next``/``q_next`` hold
    alpha_{k+1} and q_{k+1} from the half step needed by the second matrix
    relation; ``alpha_next`` is 0 (and ``q_next`` None) if that half step
    broke down.

    ``terminated_at`` is set when the process broke down: the Krylov space
    stopped growing after ``k`` steps, which for a right-hand side touching
    ``s`` distinct singular values happens at ``k = s``.
    """

    P: np.ndarray
    Q: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    k: int
    alpha_next: float
    q_next: Optional[np.ndarray]
    terminated_at: Optional[int]
    reorth: bool
    breakdown_tol: float

    @property
    def terminated(self) -> bool:
        return self.terminated_at is not None

    def Bk(self, k: Optional[int] = None) -> np.ndarray:
        return form_Bk(self, self.k if k is None else k)

    def rows(self):
        """``(j, alpha_j, beta_{j+1})`` for the CSV dump."""
        for j in range(1, self.k + 1):
            yield j, self.alphas[j - 1], self.betas[j]


def _reorthogonalize(v: np.ndarray, basis: np.ndarray) -> np.ndarray:
    # classical Gram-Schmidt applied twice
    if basis.shape[1] == 0:
        return v
    v = v - basis @ (basis.T @ v)
    return v - basis @ (basis.T @ v)


def _completion_vector(basis: np.ndarray) -> Optional[np.ndarray]:
    """A unit vector orthogonal to ``basis`` (None if the basis is complete)."""
    m, j = basis.shape
    if j >= m:
        return None
    # the coordinate vector with the largest residual is well away from span(basis)
    resid = 1.0 - np.sum(basis**2, axis=1)
    v = np.zeros(m)
    v[int(np.argmax(resid))] = 1.0
    v = _reorthogonalize(v, basis)
    return v / np.linalg.norm(v)


def run_bidiag(
    A,
    b,
    kmax: int,
    reorth: bool = True,
    breakdown_tol: float = 1e-12,
) -> BidiagState:
    """Run up to ``kmax`` steps of Golub-Kahan bidiagonalization.

    Starts from ``p_1 = b / ||b||`` and alternates
    ``alpha_j q_j = A^T p_j - beta_j q_{j-1}`` and
    ``beta_{j+1} p_{j+1} = A q_j - alpha_j p_j``.

    Parameters
    ----------
    A : (m, n) array_like
    b : (m,) array_like
    kmax : int
        Maximum number of steps, ``1 <= kmax <= n``.
    reorth : bool
        Reorthogonalize every new vector against all previous ones (twice).
    breakdown_tol : float
        A coefficient at or below ``breakdown_tol * alpha_1`` counts as zero.

    Notes
    -----
    On a beta breakdown at step ``j`` the tiny beta_{j+1} is kept and
    ``p_{j+1}`` is replaced by any unit vector orthogonal to ``P_j`` (a zero
    column when ``P_j`` already spans the whole space), so both matrix
    relations and the orthonormality of ``P`` survive. On an alpha breakdown
    at step ``j`` the run stops after ``j - 1`` steps with ``alpha_next = 0``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if b.shape != (m,):
        raise ValueError(f"b has shape {b.shape}, expected ({m},)")
    if not 1 <= kmax <= n:
        raise ValueError(f"kmax must lie in [1, {n}], got {kmax}")
    beta1 = np.linalg.norm(b)
    if beta1 == 0:
        raise ValueError("b must be nonzero")

    P = np.zeros((m, kmax + 1))
    Q = np.zeros((n, kmax))
    alphas = np.zeros(kmax)
    betas = np.zeros(kmax + 1)
    betas[0] = beta1
    P[:, 0] = b / beta1

    scale = None
    terminated_at = None
    k = 0
    q_prev = np.zeros(n)
    for j in range(kmax):
        r = A.T @ P[:, j] - betas[j] * q_prev
        if reorth:
            r = _reorthogonalize(r, Q[:, :j])
        alpha = np.linalg.norm(r)
        if scale is None:
            scale = alpha
        if alpha <= breakdown_tol * scale:
            terminated_at = j
            break
        alphas[j] = alpha
        Q[:, j] = r / alpha
        k = j + 1

        z = A @ Q[:, j] - alpha * P[:, j]
        if reorth:
            z = _reorthogonalize(z, P[:, :j + 1])
        beta = np.linalg.norm(z)
        betas[j + 1] = beta
        if beta <= breakdown_tol * scale:
            fill = _completion_vector(P[:, :j + 1])
            if fill is not None:
                P[:, j + 1] = fill
            terminated_at = j + 1
            break
        P[:, j + 1] = z / beta
        q_prev = Q[:, j]

    if terminated_at == 0:
        # A^T b vanishes: nothing to build on
        raise ValueError("A^T b is numerically zero; the Krylov space is empty")

    alpha_next, q_next = 0.0, None
    if terminated_at is None:
        r = A.T @ P[:, k] - betas[k] * Q[:, k - 1]
        if reorth:
            r = _reorthogonalize(r, Q[:, :k])
        a = np.linalg.norm(r)
        if a > breakdown_tol * scale:
            alpha_next, q_next = float(a), r / a
        else:
            terminated_at = k

    return BidiagState(
        P=P[:, :k + 1].copy(),
        Q=Q[:, :k].copy(),
        alphas=alphas[:k].copy(),
        betas=betas[:k + 1].copy(),
        k=k,
        alpha_next=alpha_next,
        q_next=q_next,
        terminated_at=terminated_at,
        reorth=reorth,
        breakdown_tol=breakdown_tol,
    )


def form_Bk(state: BidiagState, k: int) -> np.ndarray:
    """The ``(k+1) x k`` lower bidiagonal matrix of the first ``k`` steps."""
    if not 1 <= k <= state.k:
        raise ValueError(f"k must lie in [1, {state.k}], got {k}")
    B = np.zeros((k + 1, k))
    idx = np.arange(k)
    B[idx, idx] = state.alphas[:k]
    B[idx + 1, idx] = state.betas[1:k + 1]
    return B
