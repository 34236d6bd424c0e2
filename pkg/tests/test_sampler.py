import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hilbertsgd.core import InvalidParameterError, basis_vector, make_spectrum, phi_norm
from hilbertsgd.sampler import (
    KINDS,
    SamplerSpec,
    assumption3_constant,
    atoms,
    default_probes,
    fourth_moments,
    mean_se,
    moment_report,
    sample,
    third_term,
)


def coord_fourth_oracle(kind, lam):
    # E x_i**4 from scipy distributions, independent of the library's table
    if kind == "gff":
        return stats.norm(scale=math.sqrt(lam)).moment(4)
    if kind == "gamma-sym":
        return stats.gamma(lam).moment(2)  # x**4 = y**2
    raise ValueError(kind)


def third_term_oracle(theta, lam, beta, kind):
    # double loop over E[x_i**2 x_j**2] using independence
    total = 0.0
    for i, (ti, li) in enumerate(zip(theta, lam)):
        for j, lj in enumerate(lam):
            m = coord_fourth_oracle(kind, li) if i == j else li * lj
            total += ti * ti * lj ** -beta * m
    return total


@pytest.fixture(scope="module")
def spec20():
    return make_spectrum("power-law", (0.4, 2), 20)


def test_coordinate_bounded_atoms(spec20):
    s = SamplerSpec("coordinate-bounded", spec20, 3)
    x = sample(s, s.stream(0), 500)
    assert np.all(np.count_nonzero(x, axis=1) == 1)
    norms = (x * x).sum(axis=1)
    np.testing.assert_allclose(norms, spec20.trace(), rtol=1e-12)
    p, amp = atoms(spec20)
    assert math.fsum(p) == pytest.approx(1.0, rel=1e-15)
    np.testing.assert_allclose(p * amp**2, spec20.eigenvalues, rtol=1e-14)


def test_gff_coordinate_variances():
    sp = make_spectrum("power-law", (0.4, 2), 50)
    rep = moment_report(SamplerSpec("gff", sp, 11), 100_000)
    z = (rep.mean_sq_coords - sp.eigenvalues) / rep.mean_sq_se
    assert np.all(np.abs(z) < 4)


def test_gamma_sym_fourth_moments(spec20):
    s = SamplerSpec("gamma-sym", spec20, 5)
    x = sample(s, s.stream(0), 100_000)
    x4 = x**4
    m = x4.mean(axis=0)
    se = x4.std(axis=0, ddof=1) / math.sqrt(x.shape[0])
    oracle = np.array([coord_fourth_oracle("gamma-sym", l) for l in spec20.eigenvalues])
    np.testing.assert_allclose(fourth_moments(s), oracle, rtol=1e-12)
    assert np.all(np.abs(m - oracle) <= 4 * se)


def test_gff_fourth_moment_table(spec20):
    s = SamplerSpec("gff", spec20, 0)
    oracle = [coord_fourth_oracle("gff", l) for l in spec20.eigenvalues]
    np.testing.assert_allclose(fourth_moments(s), oracle, rtol=1e-12)


def test_moment_report_coordinate_bounded(spec20):
    rep = moment_report(SamplerSpec("coordinate-bounded", spec20, 1), 20_000)
    M = spec20.trace()
    assert rep.m2 == pytest.approx(M, rel=1e-12)
    assert rep.m4 == pytest.approx(M * M, rel=1e-12)
    assert rep.m2_se == 0.0
    assert rep.delta == spec20.eigenvalues[-1]


@pytest.mark.parametrize("kind", KINDS)
def test_moment_report_m2_and_decorrelation(kind, spec20):
    rep = moment_report(SamplerSpec(kind, spec20, 2), 50_000)
    if rep.m2_se > 0:
        assert abs(rep.m2 - spec20.trace()) <= 4 * rep.m2_se
    z = np.abs(rep.cross_means) / np.where(rep.cross_se > 0, rep.cross_se, 1.0)
    assert np.all(z <= 4)
    assert rep.cross_corr >= 0


def test_moment_report_needs_samples(spec20):
    with pytest.raises(InvalidParameterError):
        moment_report(SamplerSpec("gff", spec20), 10)


@pytest.mark.parametrize("kind", KINDS)
def test_unbiased_covariance(kind, spec20):
    # average of S_x theta approaches S theta
    s = SamplerSpec(kind, spec20, 9)
    theta = np.linspace(1.0, -1.0, 20)
    x = sample(s, s.stream(0), 100_000)
    vals = (x @ theta)[:, None] * x
    m = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(x.shape[0])
    assert np.all(np.abs(m - spec20.eigenvalues * theta) < 5 * se)


def test_reproducible_and_batch_invariant(spec20):
    for kind in KINDS:
        s = SamplerSpec(kind, spec20, 42)
        whole = sample(s, s.stream(3), 64)
        st_ = s.stream(3)
        pieces = np.vstack([sample(s, st_, 10), sample(s, st_, 50),
                            np.atleast_2d(sample(s, st_)), sample(s, st_, 3)])
        np.testing.assert_array_equal(whole, pieces)
        other = sample(s, s.stream(4), 64)
        assert not np.array_equal(whole, other)


def test_single_draw_is_vector(spec20):
    s = SamplerSpec("gff", spec20)
    assert sample(s, s.stream()).shape == (20,)


def test_sampler_spec_validation(spec20):
    with pytest.raises(InvalidParameterError):
        SamplerSpec("cauchy", spec20)
    with pytest.raises(InvalidParameterError):
        SamplerSpec("gff", spec20, -1)


def test_mean_se_conventions():
    assert mean_se([2.5] * 7) == (2.5, 0.0)
    m, s = mean_se([1.0, 2.0, 3.0])
    assert m == 2.0
    assert s == pytest.approx(1 / math.sqrt(3))
    assert all(math.isnan(v) for v in mean_se([]))


@pytest.mark.parametrize("kind", ["gff", "gamma-sym"])
@pytest.mark.parametrize("beta", [0.0, 0.3, 1.0])
def test_third_term_against_double_loop(kind, beta):
    sp = make_spectrum("power-law", (0.4, 2), 8)
    theta = np.array([0.5, -0.2, 0.3, 0.1, -0.7, 0.05, 0.2, -0.1])
    got = third_term(theta, SamplerSpec(kind, sp), beta)
    assert got == pytest.approx(third_term_oracle(theta, sp.eigenvalues, beta, kind), rel=1e-12)


def test_third_term_coordinate_bounded_closed_form(spec20):
    # every atom has squared norm M, so the term is M * phi_{beta-1}
    theta = np.cos(np.arange(20.0))
    s = SamplerSpec("coordinate-bounded", spec20)
    for beta in (0.0, 0.5, 1.2):
        want = spec20.trace() * phi_norm(theta, spec20, beta - 1.0)
        assert third_term(theta, s, beta) == pytest.approx(want, rel=1e-12)


def test_gamma_sym_identity_monte_carlo(spec20):
    s = SamplerSpec("gamma-sym", spec20, 17)
    x = sample(s, s.stream(0), 200_000)
    rng = np.random.default_rng(1)
    w = spec20.eigenvalues ** -0.3
    for _ in range(3):
        theta = rng.standard_normal(20) * np.arange(1, 21) ** -1.0
        vals = (x @ theta) ** 2 * ((x * x) @ w)
        m, se = mean_se(vals)
        assert abs(m - third_term(theta, s, 0.3)) <= 4 * se


def test_assumption3_basis_probes(spec20):
    s = SamplerSpec("gamma-sym", spec20, 0)
    beta = 0.3
    est = assumption3_constant(s, beta, probes=np.eye(20), n_samples=100_000)
    lam = spec20.eigenvalues
    per_probe = (spec20.K(beta) * lam + lam ** (1 - beta)) / lam ** (1 - beta)
    np.testing.assert_allclose(est.probe_exact, per_probe, rtol=1e-12)
    assert np.all(per_probe <= spec20.K(beta) + 1)
    assert est.analytic == pytest.approx(spec20.K(beta) + 1)
    assert abs(est.ratio - per_probe.max()) <= 4 * est.stderr


def test_assumption3_beta_zero_below_bound(spec20):
    est = assumption3_constant(SamplerSpec("gamma-sym", spec20, 4), 0.0, n_samples=100_000)
    assert est.ratio <= spec20.K(0.0) + 1 + 4 * est.stderr


def test_assumption3_coordinate_bounded_enumeration(spec20):
    s = SamplerSpec("coordinate-bounded", spec20, 8)
    est = assumption3_constant(s, 0.2, n_samples=100_000)
    # the ratio is M for every probe
    np.testing.assert_allclose(est.probe_exact, spec20.trace(), rtol=1e-12)
    z = np.abs(est.probe_ratios - est.probe_exact) / est.probe_se
    assert np.all(z <= 4)
    assert est.analytic is None


def test_assumption3_rejects_beta_above_data_exponent(spec20):
    with pytest.raises(InvalidParameterError):
        assumption3_constant(SamplerSpec("gamma-sym", spec20), 0.5, n_samples=1000)


def test_assumption3_skips_degenerate_probes(spec20):
    probes = np.vstack([np.zeros(20), basis_vector(1, 20)])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        est = assumption3_constant(SamplerSpec("gamma-sym", spec20), 0.2, probes=probes,
                                   n_samples=1000)
    assert est.skipped == 1
    assert any("skipping" in str(w.message) for w in caught)


def test_remark_ratio_grows_along_basis():
    # E[<e_i,x>^2 phi_beta(x)] / lambda_i^(1-kappa) for kappa < beta
    sp = make_spectrum("power-law", (0.4, 2), 400)
    s = SamplerSpec("gamma-sym", sp)
    beta, kappa = 0.4, 0.1
    ratios = [third_term(basis_vector(i, 400), s, beta) / sp.eigenvalues[i - 1] ** (1 - kappa)
              for i in (1, 10, 100, 400)]
    assert ratios[-1] > ratios[0]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))


def test_default_probes_shape(spec20):
    p = default_probes(spec20, n_random=5)
    assert p.shape == (25, 20)
    np.testing.assert_array_equal(p[:20], np.eye(20))
    np.testing.assert_allclose((p[20:] ** 2).sum(axis=1), 1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**63), st.integers(0, 1000))
def test_determinism_any_seed(seed, replica):
    sp = make_spectrum("power-law", (0.4, 2), 6)
    s = SamplerSpec("gamma-sym", sp, seed)
    np.testing.assert_array_equal(sample(s, s.stream(replica), 4), sample(s, s.stream(replica), 4))
