import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hilbertsgd.core import (
    DimensionMismatchError,
    InvalidParameterError,
    Spectrum,
    apply_S_pow,
    apply_S_x,
    apply_T_x,
    basis_vector,
    inner,
    make_spectrum,
    phi_norm,
    phi_norms,
    power_law_vector,
    regularity,
)


def brute_phi(theta, lam, beta):
    # oracle: plain python loop, no log space, no numpy reductions
    total = 0.0
    for t, l in zip(theta, lam):
        total += t * t * l ** (-beta)
    return total


def test_power_law_spectrum_values():
    sp = make_spectrum("power-law", (0.4, 2), 4)
    np.testing.assert_allclose(sp.eigenvalues, [0.4, 0.1, 0.4 / 9, 0.025], rtol=1e-15)
    assert sp.scale == 1.0
    assert sp.dim == 4


def test_explicit_spectrum_is_rescaled():
    sp = make_spectrum("explicit", (0.6, 0.1), 2)
    np.testing.assert_array_equal(sp.eigenvalues, [0.3, 0.05])
    assert sp.scale == 0.5


def test_explicit_spectrum_sorted():
    sp = make_spectrum("explicit", (0.1, 0.3, 0.2), 3)
    assert list(sp.eigenvalues) == [0.3, 0.2, 0.1]


def test_geometric_spectrum():
    sp = make_spectrum("geometric", (0.4, 0.5), 3)
    np.testing.assert_array_equal(sp.eigenvalues, [0.4, 0.2, 0.1])


@pytest.mark.parametrize("family,params,d", [
    ("power-law", (-0.4, 2), 3),
    ("power-law", (0.4, 0), 3),
    ("geometric", (0.4, 1.5), 3),
    ("geometric", (0.0, 0.5), 3),
    ("explicit", (0.3, -0.1), 2),
    ("explicit", (0.3,), 2),
    ("power-law", (0.4, 2), 0),
    ("banana", (1, 2), 3),
])
def test_make_spectrum_rejects(family, params, d):
    with pytest.raises(InvalidParameterError):
        make_spectrum(family, params, d)


def test_spectrum_invariants_enforced():
    with pytest.raises(InvalidParameterError):
        Spectrum(np.array([0.1, 0.2]))
    with pytest.raises(InvalidParameterError):
        Spectrum(np.array([0.5]))
    with pytest.raises(InvalidParameterError):
        Spectrum(np.array([]))


def test_spectrum_is_read_only():
    sp = make_spectrum("power-law", (0.4, 2), 5)
    with pytest.raises(ValueError):
        sp.eigenvalues[0] = 0.1


def test_K_matches_direct_sum():
    sp = make_spectrum("power-law", (0.4, 2), 50)
    for beta in (0.0, 0.3, 1.0):
        assert sp.K(beta) == pytest.approx(sum(l ** (1 - beta) for l in sp.eigenvalues), rel=1e-14)
    assert sp.K(1.0) == 50.0
    assert sp.trace() == pytest.approx(sp.K(0.0), rel=1e-15)


def test_phi_basis_vector():
    sp = make_spectrum("power-law", (0.4, 2), 6)
    for beta in (-1.0, 0.0, 0.7, 2.0):
        assert phi_norm(basis_vector(1, 6), sp, beta) == pytest.approx(0.4 ** -beta, rel=1e-14)


def test_phi_beta_zero_is_squared_norm():
    sp = make_spectrum("power-law", (0.4, 2), 10)
    theta = np.linspace(-1, 1, 10)
    assert phi_norm(theta, sp, 0.0) == pytest.approx(float(theta @ theta), rel=1e-15)


def test_phi_against_brute_force():
    d = 1000
    sp = make_spectrum("power-law", (0.4, 2), d)
    theta = [i ** -2.0 for i in range(1, d + 1)]
    lam = [0.4 * i ** -2.0 for i in range(1, d + 1)]
    assert phi_norm(theta, sp, 1.0) == pytest.approx(brute_phi(theta, lam, 1.0), rel=1e-12)


def test_phi_overflow_reports_inf():
    sp = make_spectrum("geometric", (0.4, 1e-3), 60)
    theta = np.ones(60)
    assert phi_norm(theta, sp, 3.0) == math.inf


def test_phi_zero_vector_is_zero():
    sp = make_spectrum("power-law", (0.4, 2), 10)
    assert phi_norm(np.zeros(10), sp, 5.0) == 0.0


def test_phi_norms_rows():
    sp = make_spectrum("power-law", (0.4, 2), 7)
    rows = np.arange(21, dtype=float).reshape(3, 7) / 10
    got = phi_norms(rows, sp, 0.5)
    for r, g in zip(rows, got):
        assert g == phi_norm(r, sp, 0.5)


def test_dimension_mismatch():
    sp = make_spectrum("power-law", (0.4, 2), 5)
    with pytest.raises(DimensionMismatchError):
        phi_norm(np.ones(4), sp, 0.0)
    with pytest.raises(DimensionMismatchError):
        inner(np.ones(3), np.ones(4))


def test_non_finite_entries_rejected():
    sp = make_spectrum("power-law", (0.4, 2), 3)
    with pytest.raises(InvalidParameterError):
        phi_norm([1.0, math.nan, 0.0], sp, 0.0)


def test_S_pow_cases():
    sp = make_spectrum("power-law", (0.4, 2), 5)
    theta = np.array([1.0, -2.0, 3.0, 0.5, 0.1])
    np.testing.assert_array_equal(apply_S_pow(theta, sp, 0.0), theta)
    np.testing.assert_allclose(apply_S_pow(basis_vector(2, 5), sp, 1.0), 0.1 * basis_vector(2, 5),
                               rtol=1e-15)
    back = apply_S_pow(apply_S_pow(theta, sp, -1.0), sp, 1.0)
    np.testing.assert_allclose(back, theta, rtol=1e-12)


def test_T_x_cases():
    theta = np.array([0.3, -0.2, 0.5])
    x = np.array([0.0, 0.0, 0.0])
    np.testing.assert_array_equal(apply_T_x(theta, np.array([1.0, 2.0, 0.0]), 0.0), theta)
    np.testing.assert_array_equal(apply_T_x(theta, x, 0.7), theta)
    perp = np.array([0.2, 0.3, 0.0])
    np.testing.assert_array_equal(apply_T_x(theta, perp, 0.9), theta)
    unit = np.array([0.6, 0.0, 0.8])
    np.testing.assert_allclose(apply_T_x(unit, unit, 1.0), 0.0, atol=1e-16)
    with pytest.raises(InvalidParameterError):
        apply_T_x(theta, unit, -0.1)


def test_power_law_vector_normalised():
    v = power_law_vector(2.0, 100)
    assert math.fsum(v * v) == pytest.approx(1.0, rel=1e-15)
    assert v[0] > v[1] > v[-1] > 0


def test_regularity_power_law():
    sp = make_spectrum("power-law", (0.4, 2), 4000)
    rep = regularity(sp, s=2.0, betas=(0.0, 1.0, 1.4, 1.6, 2.0))
    assert rep.alpha_theta == 1.5
    assert rep.alpha_data == 0.5
    # partial-sum oracle: convergent below alpha_theta, divergent above
    assert not rep.theta_divergent[1.0]
    assert not rep.theta_divergent[1.4]
    assert rep.theta_divergent[1.6]
    assert rep.theta_divergent[2.0]
    assert not rep.data_divergent[0.0]
    assert rep.data_divergent[1.0]


def test_regularity_beta_one_always_divergent():
    # sum lambda**0 = d grows linearly with d
    for sp in (make_spectrum("geometric", (0.4, 0.9), 200),
               make_spectrum("explicit", np.linspace(0.4, 0.01, 300), 300)):
        rep = regularity(sp, betas=(1.0,))
        assert rep.data_divergent[1.0]
        assert rep.alpha_data is None or rep.alpha_data <= 1


def test_regularity_rejects_bad_s():
    sp = make_spectrum("power-law", (0.4, 2), 10)
    with pytest.raises(InvalidParameterError):
        regularity(sp, s=0.4)


vectors = arrays(np.float64, 12, elements=st.floats(-10, 10, allow_nan=False))
SPEC12 = make_spectrum("power-law", (0.4, 1.5), 12)


@given(vectors, st.floats(-2, 2), st.floats(0.01, 2))
def test_phi_monotone_in_beta(theta, beta, step):
    lo = phi_norm(theta, SPEC12, beta)
    hi = phi_norm(theta, SPEC12, beta + step)
    assert hi >= lo * (1 - 1e-13)


@given(vectors, vectors, vectors)
def test_S_x_symmetric_and_nonnegative(eta, theta, x):
    a = inner(eta, apply_S_x(theta, x))
    b = inner(theta, apply_S_x(eta, x))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)
    assert inner(theta, apply_S_x(theta, x)) >= 0.0


@given(vectors, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_S_pow_composition(theta, k1, k2):
    got = apply_S_pow(apply_S_pow(theta, SPEC12, k1), SPEC12, k2)
    want = apply_S_pow(theta, SPEC12, k1 + k2)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=0)


@settings(max_examples=200)
@given(vectors.filter(lambda v: np.any(np.abs(v) > 1e-100)),
       st.floats(-1, 0.9), st.floats(0.05, 1), st.floats(0.05, 1))
def test_holder_interpolation(theta, b, gap1, gap2):
    k, a = b + gap1, b + gap1 + gap2
    p = (a - k) / (a - b)
    lk = math.log(phi_norm(theta, SPEC12, k))
    rhs = p * math.log(phi_norm(theta, SPEC12, b)) + (1 - p) * math.log(phi_norm(theta, SPEC12, a))
    assert lk <= rhs + 1e-12 * max(1.0, abs(lk))
