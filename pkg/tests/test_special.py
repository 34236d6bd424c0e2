import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from hilbertsgd.analysis import gamma_function, log_gamma


def gamma_by_quadrature(z):
    # Euler's integral, split at 1 so the endpoint singularity stays integrable
    f = lambda t: t ** (z - 1) * math.exp(-t)
    head, _ = integrate.quad(f, 0, 1, epsabs=0, epsrel=1e-13, limit=200)
    tail, _ = integrate.quad(f, 1, math.inf, epsabs=0, epsrel=1e-13, limit=200)
    return head + tail


def test_known_values():
    assert gamma_function(1) == 1.0
    assert gamma_function(5) == 24.0
    assert gamma_function(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert gamma_function(0.5) == pytest.approx(1.7724538509, abs=1e-10)


@pytest.mark.parametrize("z", [0.1, 0.25, 0.7, 1.5, 2.5, 3.3])
def test_against_quadrature(z):
    assert gamma_function(z) == pytest.approx(gamma_by_quadrature(z), rel=1e-9)


@given(st.floats(1e-3, 50.0))
def test_against_stdlib(z):
    assert gamma_function(z) == pytest.approx(math.gamma(z), rel=1e-13)
    assert log_gamma(z) == pytest.approx(math.lgamma(z), rel=1e-12, abs=1e-13)


@given(st.floats(0.01, 30.0))
def test_recurrence(z):
    assert gamma_function(z + 1) == pytest.approx(z * gamma_function(z), rel=1e-13)


def test_factorials_exact():
    for k in range(1, 24):
        assert gamma_function(k) == float(math.factorial(k - 1))


@pytest.mark.parametrize("z", [0.0, -1.0, -0.5, math.nan])
def test_domain(z):
    with pytest.raises(ValueError):
        gamma_function(z)
    with pytest.raises(ValueError):
        log_gamma(z)
