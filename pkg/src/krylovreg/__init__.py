"""Regularizing behaviour of LSQR on synthetic discrete ill-posed problems.

The package builds test problems with prescribed singular values, computes
dense SVD ground truth, runs Golub-Kahan bidiagonalization and LSQR, and
measures how well the Krylov rank-k approximation and its Ritz values track
the truncated SVD.
"""

from .bidiag import BidiagState, form_Bk, run_bidiag
from .diagnostics import (
    BoundsReport,
    RankKReport,
    SubspaceReport,
    bounds_report,
    build_Ck,
    delta_k,
    gamma_dense,
    gamma_trailing,
    lagrange_values,
    rayleigh_check,
    ritz_report,
    sin_theta_direct,
    subspace_report,
)
from .lsqr import LsqrRun, filter_factors, filtered_expansion, run_cgls, run_lsqr
from .problem_gen import ProblemSpec, SpectrumSpec, TestProblem, assemble_problem, make_spectrum
from .svd_oracle import CompactSVD, ReorganizedSVD, compute_svd, reorganize, transition_points

__version__ = "0.1.0"

__all__ = [
    "BidiagState", "form_Bk", "run_bidiag",
    "BoundsReport", "RankKReport", "SubspaceReport", "bounds_report", "build_Ck", "delta_k",
    "gamma_dense", "gamma_trailing", "lagrange_values", "rayleigh_check", "ritz_report",
    "sin_theta_direct", "subspace_report",
    "LsqrRun", "filter_factors", "filtered_expansion", "run_cgls", "run_lsqr",
    "ProblemSpec", "SpectrumSpec", "TestProblem", "assemble_problem", "make_spectrum",
    "CompactSVD", "ReorganizedSVD", "compute_svd", "reorganize", "transition_points",
]
