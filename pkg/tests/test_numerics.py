import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from posaid.errors import ContractError, DomainError, NumericalRankError
from posaid.numerics import (RngStream, as_hermitian, bessel_j0, cholesky_psd, logdet_capacity,
                             sample_standard_complex_gaussian)

# J0 reference values from mpmath at 15 significant digits, frozen
J0_TABLE = [
    (0.0, 1.0),
    (0.1, 0.99750156206604),
    (1.0, 0.765197686557967),
    (5.0, -0.177596771314338),
    (7.99, 0.173990013127933),
    (8.0, 0.171650807137554),
    (8.01, 0.169297369110543),
    (20.0, 0.167024664340583),
    (100.0, 0.0199858503042231),
    (1000.0, 0.0247866861524202),
    (1e4, -0.0070961603533888),
    (math.pi / 10, 0.97547777407525),
]


@pytest.mark.parametrize("x, ref", J0_TABLE)
def test_j0_frozen_values(x, ref):
    assert bessel_j0(x) == pytest.approx(ref, abs=1e-13)


def test_j0_against_mpmath_dense():
    xs = np.concatenate([np.linspace(0, 20, 401), np.geomspace(20, 1e4, 200)])
    ref = np.array([float(mpmath.besselj(0, x)) for x in xs])
    assert np.max(np.abs(bessel_j0(xs) - ref)) < 1e-12


def test_j0_first_zero():
    assert abs(bessel_j0(2.404825557695773)) < 1e-14


def test_j0_scalar_returns_float_and_even():
    v = bessel_j0(3.0)
    assert isinstance(v, float)
    assert bessel_j0(-3.0) == v


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_j0_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        bessel_j0(bad)


@given(st.floats(0, 1e4))
@settings(max_examples=200, deadline=None)
def test_j0_bounded(x):
    assert abs(bessel_j0(x)) <= 1.0


def test_rng_stream_reproducible_and_independent():
    a = RngStream(7, 3).generator().standard_normal(5)
    b = RngStream(7, 3).generator().standard_normal(5)
    c = RngStream(7, 4).generator().standard_normal(5)
    d = RngStream(7, 3).substream(0).generator().standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)
    assert not np.allclose(a, d)


def test_rng_stream_rejects_bad_seed():
    with pytest.raises(ContractError):
        RngStream(-1)
    with pytest.raises(ContractError):
        RngStream(2**64)


def test_complex_gaussian_moments():
    z = sample_standard_complex_gaussian(200_000, 1)
    assert abs(np.mean(np.abs(z) ** 2) - 1.0) < 0.01
    assert abs(np.mean(z.real ** 2) - 0.5) < 0.01
    assert abs(np.mean(z.real * z.imag)) < 0.01
    assert abs(np.mean(z ** 2)) < 0.01  # circular


def test_complex_gaussian_shape():
    assert sample_standard_complex_gaussian((3, 4), 0).shape == (3, 4)


def test_as_hermitian_rejects_asymmetric():
    with pytest.raises(ContractError):
        as_hermitian(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_cholesky_exact_for_pd(rng):
    X = rng.standard_normal((6, 6))
    A = X @ X.T + 6 * np.eye(6)
    L, used = cholesky_psd(A)
    assert used == 0.0
    assert np.allclose(L @ L.T, A)


def test_cholesky_jitter_on_rank_deficient():
    v = np.ones((5, 1))
    L, used = cholesky_psd(v @ v.T)
    assert 0 < used <= 1e-4
    assert np.allclose(L @ L.T, v @ v.T + used * np.eye(5))


def test_cholesky_raises_on_indefinite():
    with pytest.raises(NumericalRankError) as info:
        cholesky_psd(np.diag([1.0, -1.0]))
    assert info.value.min_eigenvalue == pytest.approx(-1.0)


def test_logdet_capacity_identity_and_zero():
    H = np.eye(3)
    assert logdet_capacity(H, 3.0) == pytest.approx(3 * math.log2(2.0))
    assert logdet_capacity(np.ones((2, 4)), 0.0) == 0.0


def test_logdet_capacity_matches_slogdet(rng):
    H = sample_standard_complex_gaussian((10, 4, 6), rng)
    ours = logdet_capacity(H, 5.0)
    ref = [np.linalg.slogdet(np.eye(4) + 5.0 / 6 * h @ h.conj().T)[1] / math.log(2) for h in H]
    assert np.allclose(ours, ref)


def test_logdet_capacity_rejects_negative_rho():
    with pytest.raises(DomainError):
        logdet_capacity(np.eye(2), -1.0)


def test_j0_small_argument_examples():
    assert bessel_j0(math.pi) == pytest.approx(-0.304242, abs=1e-6)
    x = math.pi / 20
    assert bessel_j0(x) == pytest.approx(1 - x ** 2 / 4 + x ** 4 / 64, abs=1e-8)
    assert bessel_j0(x) == pytest.approx(0.993841, abs=1e-6)


def test_j0_agrees_with_scipy():
    from scipy.special import j0

    x = np.linspace(0, 1e4, 200_001)
    assert np.max(np.abs(bessel_j0(x) - j0(x))) < 1e-12


def test_cholesky_hand_example():
    L, used = cholesky_psd(np.array([[1.0, 0.5], [0.5, 1.0]]))
    assert used == 0.0
    assert np.allclose(L, [[1.0, 0.0], [0.5, 0.8660254]], atol=1e-7)


def test_cholesky_all_ones_with_jitter():
    L, used = cholesky_psd(np.ones((3, 3)), jitter=1e-8)
    assert used >= 1e-8
    assert np.all(np.diag(L) >= math.sqrt(1e-8) * (1 - 1e-9))


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_cholesky_roundtrip_random_psd(n, seed):
    B = sample_standard_complex_gaussian((n, n), seed)
    A = B @ B.conj().T
    L, used = cholesky_psd(A)
    err = np.linalg.norm(L @ L.conj().T - (A + used * np.eye(n))) / np.linalg.norm(A)
    assert err <= 1e-10


def test_logdet_capacity_against_eigenvalues(rng):
    H = sample_standard_complex_gaussian((4, 4), rng)
    lam = np.linalg.eigvalsh(H @ H.conj().T)
    assert logdet_capacity(H, 2.5) == pytest.approx(np.sum(np.log2(1 + 2.5 / 4 * lam)), abs=1e-10)


def test_logdet_capacity_monotone_in_rho(rng):
    H = sample_standard_complex_gaussian((3, 5), rng)
    vals = [logdet_capacity(H, r) for r in (0.0, 0.1, 1.0, 10.0, 100.0)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_complex_gaussian_moment_bounds():
    z = sample_standard_complex_gaussian(100_000, RngStream(3).generator())
    assert abs(z.mean()) <= 0.02
    assert 0.98 <= np.mean(np.abs(z) ** 2) <= 1.02
