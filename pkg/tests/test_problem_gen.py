import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krylovreg import ProblemSpec, SpectrumSpec, assemble_problem, make_spectrum
from krylovreg.problem_gen import group_distinct


def test_severe_spectrum_formula():
    sig = make_spectrum(SpectrumSpec("severe", 4, rho=2.0, multiplicities=(1, 1, 1, 1)))
    np.testing.assert_array_equal(sig, [0.5, 0.25, 0.125, 0.0625])


def test_power_spectrum_formula():
    np.testing.assert_allclose(make_spectrum(SpectrumSpec("power", 3, alpha=1.0)), [1, 1 / 2, 1 / 3])


def test_power_spectrum_with_multiplicities():
    sig = make_spectrum(SpectrumSpec("power", 4, alpha=0.5, multiplicities=(2, 2)))
    r = 2**-0.5
    np.testing.assert_allclose(sig, [1, 1, r, r])


@pytest.mark.parametrize(
    "kw, match",
    [
        (dict(kind="severe", rho=1.0), "rho"),
        (dict(kind="severe", rho=0.9), "rho"),
        (dict(kind="power", alpha=0.0), "alpha"),
        (dict(kind="explicit", values=(1.0, 0.0, 0.5)), "positive"),
        (dict(kind="power", alpha=1.0, multiplicities=(2, 2)), "sum to 4"),
    ],
)
def test_invalid_spectra_rejected(kw, match):
    kind = kw.pop("kind")
    with pytest.raises(ValueError, match=match):
        SpectrumSpec(kind, 3, **kw)


@given(
    rho=st.floats(1.05, 5.0),
    s=st.integers(2, 30),
)
def test_severe_ratio_is_rho(rho, s):
    sig = make_spectrum(SpectrumSpec("severe", s, rho=rho))
    np.testing.assert_allclose(sig[:-1] / sig[1:], rho, rtol=1e-12)


@given(alpha=st.floats(0.1, 4.0), s=st.integers(2, 40))
def test_power_ratio(alpha, s):
    sig = make_spectrum(SpectrumSpec("power", s, alpha=alpha))
    k = np.arange(1, s)
    np.testing.assert_allclose(sig[:-1] / sig[1:], ((k + 1) / k) ** alpha, rtol=1e-12)


@given(st.lists(st.integers(1, 4), min_size=1, max_size=12))
def test_grouping_recovers_multiplicities(mults):
    n = sum(mults)
    sig = make_spectrum(SpectrumSpec("severe", n, rho=1.5, multiplicities=tuple(mults)))
    groups = group_distinct(sig, 1e-12)
    assert [g.multiplicity for g in groups] == mults


def test_group_distinct_examples():
    assert [tuple(g) for g in group_distinct([1, 1, 0.5], 0)] == [(1, 2), (0.5, 1)]
    merged = group_distinct([1, 1 + 1e-14, 0.5], 1e-12)
    assert [g.multiplicity for g in merged] == [2, 1]
    assert merged[0].value == pytest.approx(1.0)
    six = group_distinct(make_spectrum(SpectrumSpec("severe", 6, rho=2.0)), 1e-12)
    assert [g.multiplicity for g in six] == [1] * 6


def test_diagonal_override():
    spec = ProblemSpec(3, 3, SpectrumSpec("explicit", 3, values=(1, 0.5, 1 / 3)), noise_level=0.0)
    pr = assemble_problem(spec, U=np.eye(3), V=np.eye(3))
    np.testing.assert_allclose(pr.b, [1, 0.5, 1 / 3])


def test_problem_invariants_and_exact_noise_level():
    spec = ProblemSpec(500, 500, SpectrumSpec("power", 500, alpha=1.0), noise_level=1e-3, seed=7)
    pr = assemble_problem(spec)
    eye = np.eye(500)
    assert np.linalg.norm(pr.U.T @ pr.U - eye) <= 1e-10
    assert np.linalg.norm(pr.V.T @ pr.V - eye) <= 1e-10
    assert np.linalg.norm(pr.A - (pr.U * pr.sigma) @ pr.V.T, 2) <= 1e-10 * pr.sigma[0]
    np.testing.assert_array_equal(pr.b, pr.b_true + pr.e)
    np.testing.assert_array_equal(pr.b_true, pr.A @ pr.x_true)
    assert abs(np.linalg.norm(pr.e) / np.linalg.norm(pr.b_true) - 1e-3) <= 1e-12


def test_seed_determinism():
    spec = ProblemSpec(80, 60, SpectrumSpec("power", 60, alpha=1.0), seed=7)
    a, b = assemble_problem(spec), assemble_problem(spec)
    assert np.array_equal(a.A, b.A) and np.array_equal(a.b, b.b)
    other = assemble_problem(ProblemSpec(80, 60, SpectrumSpec("power", 60, alpha=1.0), seed=8))
    assert not np.array_equal(a.A, other.A)


def test_rectangular_problem_has_orthonormal_columns():
    pr = assemble_problem(ProblemSpec(50, 30, SpectrumSpec("severe", 30, rho=1.3), seed=2))
    assert pr.A.shape == (50, 30)
    assert np.linalg.norm(pr.U.T @ pr.U - np.eye(30)) <= 1e-10


def test_bad_problem_specs_rejected():
    spec = SpectrumSpec("power", 5, alpha=1.0)
    with pytest.raises(ValueError):
        ProblemSpec(4, 5, spec)
    with pytest.raises(ValueError):
        ProblemSpec(5, 5, spec, noise_level=1.0)
    with pytest.raises(ValueError):
        assemble_problem(ProblemSpec(5, 5, spec, noise_level=1e-3, x_true=(0,) * 5))


def test_spec_dict_round_trip():
    spec = ProblemSpec(12, 10, SpectrumSpec("power", 10, alpha=0.5, multiplicities=(5, 5)), 1e-2, 3)
    assert ProblemSpec.from_dict(spec.to_dict()) == spec


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), level=st.floats(1e-6, 0.5))
def test_noise_level_exact_for_any_seed(seed, level):
    pr = assemble_problem(ProblemSpec(20, 20, SpectrumSpec("power", 20, alpha=1.0), level, seed))
    assert abs(np.linalg.norm(pr.e) / np.linalg.norm(pr.b_true) - level) <= 1e-12
