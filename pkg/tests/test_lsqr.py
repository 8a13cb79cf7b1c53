import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krylovreg import (
    CompactSVD,
    ProblemSpec,
    SpectrumSpec,
    assemble_problem,
    filter_factors,
    filtered_expansion,
    reorganize,
    run_bidiag,
    run_cgls,
    run_lsqr,
    transition_points,
)
from krylovreg.lsqr import ritz_values


def _problem(n, seed=0, noise=1e-3, kind="power", m=None, **kw):
    return assemble_problem(ProblemSpec(m or n, n, SpectrumSpec(kind, n, **kw), noise, seed))


def test_two_by_two_reaches_naive_solution():
    A, b = np.diag([1.0, 0.5]), np.ones(2)
    run = run_lsqr(run_bidiag(A, b, 2))
    np.testing.assert_allclose(run.x(2), [1.0, 2.0], rtol=1e-14)
    assert run.res_norms[1] <= 1e-15


def test_first_iterate_is_line_search():
    pr = _problem(40, m=50, alpha=1.0, seed=3)
    g = pr.A.T @ pr.b
    Ag = pr.A @ g
    x1 = (Ag @ pr.b) / (Ag @ Ag) * g
    run = run_lsqr(run_bidiag(pr.A, pr.b, 1))
    assert np.linalg.norm(run.x(1) - x1) <= 1e-12 * np.linalg.norm(x1)


def test_iterates_match_dense_least_squares():
    pr = _problem(80, alpha=1.0, seed=5)
    st_ = run_bidiag(pr.A, pr.b, 15)
    run = run_lsqr(st_, b=pr.b)
    for k in (1, 4, 15):
        rhs = np.zeros(k + 1)
        rhs[0] = np.linalg.norm(pr.b)
        y = np.linalg.lstsq(st_.Bk(k), rhs, rcond=None)[0]
        assert np.linalg.norm(st_.Q[:, :k] @ y - run.x(k)) <= 1e-12 * np.linalg.norm(run.x(k))
        assert run.res_norms[k - 1] == pytest.approx(np.linalg.norm(pr.A @ run.x(k) - pr.b), rel=1e-9)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000), alpha=st.floats(0.3, 2.5))
def test_norm_monotonicity(seed, alpha):
    pr = _problem(60, seed=seed, alpha=alpha)
    run = run_lsqr(run_bidiag(pr.A, pr.b, 30))
    assert np.all(np.diff(run.res_norms) <= 1e-12 * run.res_norms[0])
    assert np.all(np.diff(run.sol_norms) >= -1e-12 * run.sol_norms[-1])


def test_tau_and_b_validation():
    pr = _problem(10, alpha=1.0)
    st_ = run_bidiag(pr.A, pr.b, 3)
    with pytest.raises(ValueError):
        run_lsqr(st_, tau=0.99)
    with pytest.raises(ValueError):
        run_lsqr(st_, b=2 * pr.b)


def test_discrepancy_and_oracle_stops():
    pr = _problem(300, alpha=2.0, seed=2, noise=1e-2)
    run = run_lsqr(run_bidiag(pr.A, pr.b, 40), x_true=pr.x_true, noise_norm=np.linalg.norm(pr.e))
    e = np.linalg.norm(pr.e)
    assert run.res_norms[run.k_dp - 1] <= 1.01 * e < run.res_norms[run.k_dp - 2]
    assert run.k_star == int(np.argmin(run.err_norms)) + 1
    assert run.k_dp is not None and run.k_star < 40
    assert run.semi_convergent
    assert run.summary()["tau"] == 1.01


def test_semi_convergence_before_transition_point():
    pr = _problem(500, alpha=2.0, seed=0)
    reorg = reorganize(CompactSVD.from_problem(pr), pr.b, pr.groups)
    pic = transition_points(reorg, pr.b, pr.x_true, e=pr.e)
    run = run_lsqr(run_bidiag(pr.A, pr.b, 60), x_true=pr.x_true)
    assert run.k_star <= pic.k0_oracle
    assert run.semi_convergent


@pytest.mark.parametrize("n, alpha", [(30, 0.5), (200, 1.0)])
def test_noise_free_run_has_no_semi_convergence(n, alpha):
    pr = _problem(n, alpha=alpha, noise=0.0)
    run = run_lsqr(run_bidiag(pr.A, pr.b, n), x_true=pr.x_true)
    tol = 1e-12 * np.linalg.norm(pr.x_true)
    # k_star is where the error first reaches the rounding plateau
    assert run.err_norms[run.k_star - 1] <= tol
    assert run.k_star == 1 + int(np.nonzero(run.err_norms <= run.err_norms.min() + tol)[0][0])
    assert not run.semi_convergent


def test_exact_ties_go_to_smaller_k():
    A, b = np.diag([1.0, 0.5]), np.array([1.0, 0.0])
    run = run_lsqr(run_bidiag(A, b, 1), x_true=[1.0, 0.0])
    assert run.k_star == 1 and not run.semi_convergent


def test_lsqr_same_on_A_and_Aprime():
    pr = _problem(60, alpha=1.0, multiplicities=(3,) * 20, seed=1)
    reorg = reorganize(CompactSVD.from_problem(pr), pr.b, pr.groups)
    Ap = reorg.aprime()
    X1 = run_lsqr(run_bidiag(pr.A, pr.b, 6)).X
    X2 = run_lsqr(run_bidiag(Ap, pr.b, 6)).X
    assert np.max(np.linalg.norm(X1 - X2, axis=0) / np.linalg.norm(X2, axis=0)) <= 1e-8
    for k in range(6):
        r1 = np.linalg.norm(pr.A @ X1[:, k] - pr.b)
        r2 = np.linalg.norm(Ap @ X1[:, k] - pr.b)
        assert abs(r1 - r2) <= 1e-8 * r1


# CGLS -------------------------------------------------------------------------


def test_cgls_first_step_equals_lsqr():
    pr = _problem(100, alpha=1.0, seed=8)
    x1 = run_lsqr(run_bidiag(pr.A, pr.b, 1)).x(1)
    c1 = run_cgls(pr.A, pr.b, 1)[:, 0]
    assert np.linalg.norm(x1 - c1) <= 1e-10 * np.linalg.norm(x1)


def test_cgls_agrees_with_lsqr_on_early_iterates():
    pr = _problem(500, alpha=1.0, seed=4)
    X = run_lsqr(run_bidiag(pr.A, pr.b, 8)).X
    C = run_cgls(pr.A, pr.b, 8)
    assert np.max(np.linalg.norm(X - C, axis=0) / np.linalg.norm(X, axis=0)) <= 1e-6


def test_full_dimension_solve():
    d = np.linspace(1.0, 0.2, 10)
    A = np.diag(d)
    x_true = np.ones(10)
    b = A @ x_true
    C = run_cgls(A, b, 10)
    X = run_lsqr(run_bidiag(A, b, 10)).X
    assert np.linalg.norm(C[:, -1] - x_true) <= 1e-8 * np.linalg.norm(x_true)
    assert np.linalg.norm(X[:, -1] - x_true) <= 1e-8 * np.linalg.norm(x_true)


def test_cgls_kmax_validation_and_early_stop():
    with pytest.raises(ValueError):
        run_cgls(np.eye(3), np.ones(3), 4)
    # b is a singular vector: converged after one step, later columns repeat it
    C = run_cgls(np.diag([2.0, 1.0]), np.array([1.0, 0.0]), 2)
    np.testing.assert_allclose(C[:, 0], [0.5, 0.0])
    np.testing.assert_array_equal(C[:, 1], C[:, 0])


# filter factors -----------------------------------------------------------------


def test_filter_factors_exact_match_gives_one():
    sig = np.array([1.0, 0.5, 0.25])
    assert np.array_equal(filter_factors(sig, sig).f, np.ones(3))
    ff = filter_factors([0.5], sig)
    assert ff.f[1] == 1.0 and ff.k == 1


def test_filter_factors_reject_zero_theta():
    with pytest.raises(ValueError):
        filter_factors([1.0, 0.0], [1.0, 0.5])


def _mp_filter(theta, sigma, dps=60):
    with mpmath.workdps(dps):
        out = []
        for si in sigma:
            p = mpmath.mpf(1)
            for t in theta:
                t2 = mpmath.mpf(t) ** 2
                p *= (t2 - mpmath.mpf(si) ** 2) / t2
            out.append(1 - p)
        return np.array([float(v) for v in out])


@settings(max_examples=25, deadline=None)
@given(
    theta=st.lists(st.floats(0.05, 1.0), min_size=1, max_size=6, unique=True),
    sigma=st.lists(st.floats(1e-4, 2.0), min_size=1, max_size=8),
)
def test_filter_factors_match_extended_precision(theta, sigma):
    f = filter_factors(theta, sigma).f
    ref = _mp_filter(theta, sigma)
    th2 = np.asarray(theta) ** 2
    eps = np.finfo(float).eps
    for fi, ri, si in zip(f, ref, sigma):
        # each factor carries a few ulps of (theta^2 + sigma^2) / theta^2
        bound = 8 * len(theta) * eps * np.prod((th2 + si * si) / th2) + 2 * eps
        assert abs(fi - ri) <= bound


def test_filter_factors_far_above_ritz_values():
    # sigma_i much larger than every Ritz value: the product is huge and signed
    theta = [0.1, 0.05]
    f = filter_factors(theta, [1.0]).f[0]
    ref = _mp_filter(theta, [1.0])[0]
    assert f == pytest.approx(ref, rel=1e-14)
    assert f == pytest.approx(1 - 99 * 399, rel=1e-14)


@pytest.mark.parametrize("alpha, kmax", [(1.0, 5), (0.3, 12)])
def test_filtered_expansion_reconstructs_iterates(alpha, kmax):
    # the product form loses about prod(sigma_1/theta_j)^2 ulps, so the
    # check stays within the range of k where that factor is moderate
    pr = _problem(300, alpha=alpha, seed=3)
    reorg = reorganize(CompactSVD.from_problem(pr), pr.b, pr.groups)
    st_ = run_bidiag(pr.A, pr.b, kmax)
    run = run_lsqr(st_)
    for k in range(1, kmax + 1):
        ff = filter_factors(ritz_values(st_, k), reorg.sigma_distinct)
        x = filtered_expansion(reorg, pr.b, ff.f)
        assert np.linalg.norm(x - run.x(k)) <= 1e-8 * np.linalg.norm(run.x(k))


def test_reconstruction_identity_holds_in_high_precision():
    # independent 50-digit Golub-Kahan run on a diagonal matrix: with Ritz
    # values accurate to working precision the identity holds to ~1e-40
    mp = mpmath.mp
    with mpmath.workdps(50):
        n, k = 12, 8
        d = [mp.mpf(1) / (i + 1) for i in range(n)]
        b = [mp.mpf(1) + mp.mpf(i) / 7 for i in range(n)]
        beta = mp.sqrt(mp.fsum(x * x for x in b))
        p = [x / beta for x in b]
        Q, P, alphas, betas = [], [p], [], [beta]
        q_prev, b_prev = [mp.mpf(0)] * n, mp.mpf(0)
        for _ in range(k):
            r = [d[i] * p[i] - b_prev * q_prev[i] for i in range(n)]
            for _ in range(2):
                for qv in Q:
                    c = mp.fsum(r[i] * qv[i] for i in range(n))
                    r = [r[i] - c * qv[i] for i in range(n)]
            a = mp.sqrt(mp.fsum(x * x for x in r))
            q = [x / a for x in r]
            u = [d[i] * q[i] - a * p[i] for i in range(n)]
            for _ in range(2):
                for pv in P:
                    c = mp.fsum(u[i] * pv[i] for i in range(n))
                    u = [u[i] - c * pv[i] for i in range(n)]
            bn = mp.sqrt(mp.fsum(x * x for x in u))
            p = [x / bn for x in u]
            Q.append(q), P.append(p), alphas.append(a), betas.append(bn)
            q_prev, b_prev = q, bn
        B = mp.zeros(k + 1, k)
        for j in range(k):
            B[j, j], B[j + 1, j] = alphas[j], betas[j + 1]
        rhs = mp.zeros(k + 1, 1)
        rhs[0] = beta
        y = mp.lu_solve(B.T * B, B.T * rhs)
        x = [mp.fsum(Q[j][i] * y[j] for j in range(k)) for i in range(n)]
        theta = mp.svd_r(B, compute_uv=False)
        for i in range(n):
            prod = mp.mpf(1)
            for t in theta:
                prod *= (t**2 - d[i] ** 2) / t**2
            xf = (1 - prod) * b[i] / d[i]
            assert abs(xf - x[i]) <= mp.mpf(10) ** -40 * (1 + abs(x[i]))
