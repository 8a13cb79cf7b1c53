"""LSQR semi-convergence next to the truncated SVD.

A moderately ill-posed problem (sigma_i = i^-1) with 1% white noise. The
exact solution is chosen to satisfy the discrete Picard condition: its
coefficients in the right singular basis decay like sigma_i.
LSQR iterates first approach x_true and then pick up noise, just like TSVD
solutions with a growing truncation index. We print both error curves and
the stopping indices: the error-optimal LSQR step k_star, the discrepancy
principle step k_dp and the TSVD optimum k0.

Run with ``python demos/01_semi_convergence.py``.
"""

import numpy as np

from krylovreg import CompactSVD, ProblemSpec, SpectrumSpec, assemble_problem, reorganize, run_bidiag, run_lsqr
from krylovreg.svd_oracle import tikhonov_optimal, transition_points

# %% Build the problem and its SVD ground truth
n, seed = 400, 11
spectrum = SpectrumSpec("power", n, alpha=1.0)
# the factors depend only on the seed, so a first pass gives V for x_true
base = assemble_problem(ProblemSpec(n, n, spectrum, 1e-2, seed))
x_true = base.V @ base.sigma
problem = assemble_problem(ProblemSpec(n, n, spectrum, 1e-2, seed, x_true=tuple(x_true)))
reorg = reorganize(CompactSVD.from_problem(problem), problem.b, problem.groups)
picard = transition_points(reorg, problem.b, problem.x_true, e=problem.e)

# %% Sixty steps of bidiagonalization, then LSQR on top of it
kmax = 60
state = run_bidiag(problem.A, problem.b, kmax)
lsqr = run_lsqr(
    state, problem.b, problem.x_true, noise_norm=np.linalg.norm(problem.e), kmax=kmax
)

xnorm = np.linalg.norm(problem.x_true)
print(" k   LSQR rel. error   TSVD rel. error")
for k in range(1, kmax + 1):
    print(f"{k:2d}   {lsqr.err_norms[k - 1] / xnorm:15.4e}   {picard.tsvd_err[k - 1] / xnorm:15.4e}")

# %% Where each method is best
_, tik_err = tikhonov_optimal(reorg, problem.b, problem.x_true)
print()
print(f"LSQR optimum   k_star = {lsqr.k_star}, error {lsqr.err_norms[lsqr.k_star - 1] / xnorm:.4e}")
print(f"TSVD optimum   k0     = {picard.k0_oracle}, error {picard.tsvd_err[picard.k0_oracle - 1] / xnorm:.4e}")
print(f"Tikhonov optimum error      {tik_err / xnorm:.4e}")
print(f"discrepancy principle stops at k_dp = {lsqr.k_dp}")
print(f"semi-convergence observed: {lsqr.semi_convergent}")
