"""Repeated singular values and the reorganized SVD.

When sigma_i has multiplicity greater than one, b only sees one direction in
each singular subspace. Rotating the singular vectors so that b touches a
single one per distinct value gives a matrix A' with simple spectrum on which
the Krylov subspaces, and hence every LSQR iterate, coincide with those of A.
This script checks that claim numerically and shows that the bidiagonal
coefficient beta_{s+1} collapses to rounding level, where s is the number of
distinct values. In floating point it does not reach exact zero: rounding
errors inside each repeated singular subspace are not damped by the
recurrence, so a hard breakdown test may only fire later.
"""

import numpy as np

from krylovreg import CompactSVD, ProblemSpec, SpectrumSpec, assemble_problem, reorganize, run_bidiag, run_lsqr

# %% Four distinct values, each repeated three times
values = (1.0, 0.3, 0.09, 0.027)
spec = SpectrumSpec("explicit", 12, values=values, multiplicities=(3, 3, 3, 3))
problem = assemble_problem(ProblemSpec(15, 12, spec, 0.0, seed=2))
reorg = reorganize(CompactSVD.from_problem(problem), problem.b, problem.groups)
print(f"n = 12 singular values, s = {reorg.s} distinct and touched by b")

# %% The Krylov space is exhausted after s steps
state = run_bidiag(problem.A, problem.b, 12)
ratios = state.betas[1:reorg.s + 2] / state.alphas[0]
print("beta_{j+1} / alpha_1 for j = 1..s+1:", np.array2string(ratios, precision=2))

# %% LSQR on A and on A' give the same iterates
Aprime = reorg.aprime()
run_a = run_lsqr(state, problem.b, kmax=reorg.s)
run_p = run_lsqr(run_bidiag(Aprime, problem.b, reorg.s), problem.b, kmax=reorg.s)
for k in range(1, reorg.s + 1):
    diff = np.linalg.norm(run_a.x(k) - run_p.x(k)) / np.linalg.norm(run_a.x(k))
    print(f"k = {k}: ||x_k(A) - x_k(A')|| / ||x_k|| = {diff:.2e}")

# %% The final iterate is the minimum-norm least-squares solution
x_ls = np.linalg.lstsq(problem.A, problem.b, rcond=None)[0]
print(f"distance to lstsq solution: {np.linalg.norm(run_a.x(reorg.s) - x_ls):.2e}")
