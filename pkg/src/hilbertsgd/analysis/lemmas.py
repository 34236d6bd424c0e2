"""Numerical verifiers for the auxiliary inequalities behind the rate bounds."""

from __future__ import annotations

import math

import numpy as np

from ..core import InvalidParameterError, Spectrum, phi_norm
from ..sampler import SamplerSpec, assumption3_constant, moment_report
from .bounds import BoundCheck
from .special import gamma_function

__all__ = [
    "f_lambda",
    "f_lambda_verify",
    "f_lambda_extended_verify",
    "gamma_series",
    "gamma_series_verify",
    "TailBoundError",
    "neutral_recursion_verify",
    "holder_verify",
    "random_power_law_vectors",
    "moment_bound_verify",
]

_E_RATIO = math.e / (math.e - 1.0)


def f_lambda(lam, m: float, tau: float) -> np.ndarray:
    """``|1 - lambda|**m * lambda**tau`` evaluated in log space."""
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore"):
        return np.exp(m * np.log(np.abs(1.0 - lam)) + tau * np.log(lam))


def f_lambda_verify(m: float, tau: float, grid_size: int = 100_000,
                    rel_slack: float = 1e-12) -> BoundCheck:
    """Check the location and the two-sided bound of the maximum of ``f`` on (0, 1).

    Counted violations: grid argmax more than one grid step from
    ``tau / (m + tau)``; ``f(lambda*)`` above ``exp(-tau) (tau/m)**tau``; or below
    ``exp(-tau e/(e-1)) (tau/m)**tau``.

    The lower inequality only holds when ``tau/(m+tau) <= 1 - 1/e``, i.e.
    ``m >= tau/(e-1)``; ``extras["lower_applicable"]`` records this.
    """
    if m <= 0 or tau <= 0:
        raise InvalidParameterError("m and tau must be positive")
    h = 1.0 / (grid_size + 1)
    grid = np.arange(1, grid_size + 1) * h
    vals = f_lambda(grid, m, tau)
    lam_star = tau / (m + tau)
    arg = grid[int(np.argmax(vals))]
    f_star = float(f_lambda(lam_star, m, tau))
    scale = (tau / m) ** tau
    upper = math.exp(-tau) * scale
    lower = math.exp(-tau * _E_RATIO) * scale

    violations = 0
    if abs(arg - lam_star) > h:
        violations += 1
    if f_star > upper * (1 + rel_slack):
        violations += 1
    if f_star < lower * (1 - rel_slack):
        violations += 1
    # the grid maximum cannot exceed the analytic one
    grid_max = float(vals.max())
    if grid_max > f_star * (1 + rel_slack):
        violations += 1
    worst = min(upper - f_star, f_star - lower, f_star - grid_max)
    return BoundCheck("f_lambda", ((m, tau), grid_size), violations, worst,
                      {"lambda_star": lam_star, "grid_argmax": arg, "f_star": f_star,
                       "lower": lower, "upper": upper,
                       "lower_applicable": lam_star <= 1 - 1 / math.e})


def f_lambda_extended_verify(m: float, tau: float, eps: float = 0.5,
                             grid_size: int = 100_000) -> BoundCheck:
    """Check ``f(lambda) <= exp(-tau) (tau/m)**tau`` on ``[0, 2 - eps]`` (large ``m``)."""
    grid = np.linspace(0.0, 2.0 - eps, grid_size)
    vals = f_lambda(grid, m, tau)
    upper = math.exp(-tau) * (tau / m) ** tau
    margins = upper - vals
    violations = int(np.count_nonzero(vals > upper * (1 + 1e-12)))
    return BoundCheck("f_lambda_extended", ((m, tau, eps), grid_size), violations,
                      float(margins.min()), {"upper": upper})


class TailBoundError(ValueError):
    pass


def gamma_series(mu: float, kappa: float, n_terms: int, tol: float = 1e-12) -> float:
    """``sum_{n=1}^{n_terms} (1 - mu)**n (n mu)**kappa / n`` with a tail check.

    Raises :class:`TailBoundError` unless the neglected tail is provably below
    ``tol`` times the partial sum.
    """
    n = np.arange(1, n_terms + 1, dtype=float)
    log_terms = n * math.log1p(-mu) + kappa * np.log(n * mu) - np.log(n)
    terms = np.exp(log_terms)
    total = math.fsum(terms)
    # beyond N consecutive-term ratio is at most r = (1-mu) (1 + 1/N)**max(kappa-1, 0)
    N = float(n_terms)
    r = (1.0 - mu) * (1.0 + 1.0 / N) ** max(kappa - 1.0, 0.0)
    last = terms[-1]
    if r >= 1 or last * r / (1.0 - r) > tol * total:
        raise TailBoundError(
            f"n_terms={n_terms} too small for mu={mu}, kappa={kappa}; increase n_terms")
    return total


def gamma_series_verify(mu_grid=(0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.49),
                        kappa_grid=(0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5),
                        n_terms: int = 20_000) -> BoundCheck:
    """Ratio of the series to ``Gamma(kappa)`` over a grid of ``(mu, kappa)``.

    A violation is a ratio that is not finite and positive, or a ``kappa = 1``
    entry that differs from ``1 - mu``.  ``extras`` holds the envelope
    ``[min_ratio, max_ratio]``, the implied ``K = min(min_ratio, 1/max_ratio)``
    and the full ratio table.
    """
    for mu in mu_grid:
        if not 0 < mu < 0.5:
            raise InvalidParameterError("mu must lie in (0, 1/2)")
    ratios = np.empty((len(mu_grid), len(kappa_grid)))
    violations = 0
    for a, mu in enumerate(mu_grid):
        for b, kappa in enumerate(kappa_grid):
            if kappa <= 0:
                raise InvalidParameterError("kappa must be positive")
            r = gamma_series(mu, kappa, n_terms) / gamma_function(kappa)
            ratios[a, b] = r
            if not (math.isfinite(r) and r > 0):
                violations += 1
            if kappa == 1.0 and abs(r - (1.0 - mu)) > 1e-12 * (1.0 - mu):
                violations += 1
    lo, hi = float(ratios.min()), float(ratios.max())
    K = min(lo, 1.0 / hi)
    return BoundCheck("gamma_series", (tuple(mu_grid), tuple(kappa_grid), n_terms),
                      violations, lo,
                      {"min_ratio": lo, "max_ratio": hi, "K": K, "ratios": ratios})


def neutral_recursion_verify(a0: float, w: float, n_max: int, K: float = 0.5,
                             c0: float | None = None, rel_slack: float = 1e-12) -> BoundCheck:
    """Iterate ``a <- a - a**(1+w)`` and ``c <- c - K c**(1+w)`` against their bounds.

    Bounds: ``a_n <= a0 (1 + n w a0**w)**(-1/w)`` and
    ``c_n <= c0 (1 + n w K c0**w)**(-1/w)``.
    """
    if not 0 < a0 < 1 or w <= 0:
        raise InvalidParameterError("needs 0 < a0 < 1 and w > 0")
    c0 = a0 if c0 is None else c0
    if K <= 0 or not 0 < K * c0**w < 1:
        raise InvalidParameterError("needs K > 0 and 0 < K c0**w < 1")
    n = np.arange(n_max + 1, dtype=float)
    bound_a = a0 * (1.0 + n * w * a0**w) ** (-1.0 / w)
    bound_c = c0 * (1.0 + n * w * K * c0**w) ** (-1.0 / w)
    a = np.empty(n_max + 1)
    c = np.empty(n_max + 1)
    a[0], c[0] = a0, c0
    ai, ci = a0, c0
    for k in range(1, n_max + 1):
        ai = ai - ai ** (1.0 + w)
        ci = ci - K * ci ** (1.0 + w)
        a[k], c[k] = ai, ci
    viol = int(np.count_nonzero(a > bound_a * (1 + rel_slack)))
    viol += int(np.count_nonzero(c > bound_c * (1 + rel_slack)))
    worst = float(min((bound_a - a).min(), (bound_c - c).min()))
    return BoundCheck("neutral_recursion", ((a0, w, K, c0), n_max), viol, worst,
                      {"a_final": ai, "c_final": ci})


def random_power_law_vectors(d: int, count: int, seed: int = 0) -> np.ndarray:
    """Random-sign vectors with magnitudes ``u_i * i**-s``, ``s ~ U(0.6, 3)``, ``u_i ~ U(0.5, 1.5)``."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x401D]))
    s = rng.uniform(0.6, 3.0, count)
    i = np.arange(1, d + 1, dtype=float)
    mags = rng.uniform(0.5, 1.5, (count, d)) * i[None, :] ** -s[:, None]
    signs = np.where(rng.random((count, d)) < 0.5, -1.0, 1.0)
    return mags * signs


def holder_verify(spec: Spectrum, n_random: int = 1000,
                  exponent_triples=((0.0, 0.5, 1.0), (-1.0, 0.0, 1.0), (0.2, 0.7, 1.4)),
                  seed: int = 0, rel_slack: float = 1e-12) -> BoundCheck:
    """Check ``phi_k <= phi_b**p phi_a**(1-p)``, ``p = (a-k)/(a-b)``, and its rearrangement.

    Each triple is ``(b, k, a)`` with ``b < k < a``; comparisons are made on
    logarithms with ``rel_slack``.
    """
    thetas = random_power_law_vectors(spec.dim, n_random, seed)
    violations = 0
    worst = math.inf
    for b, k, a in exponent_triples:
        if not b < k < a:
            raise InvalidParameterError(f"triple {(b, k, a)} must satisfy b < k < a")
        p = (a - k) / (a - b)
        for th in thetas:
            lb = math.log(phi_norm(th, spec, b))
            lk = math.log(phi_norm(th, spec, k))
            la = math.log(phi_norm(th, spec, a))
            tol = rel_slack * max(1.0, abs(lk), abs(lb), abs(la))
            m1 = p * lb + (1 - p) * la - lk
            m2 = lb - (lk / p + (1 - 1 / p) * la)
            worst = min(worst, m1, m2)
            violations += (m1 < -tol) + (m2 < -tol)
    return BoundCheck("holder", (tuple(exponent_triples), n_random), int(violations), worst)


def moment_bound_verify(spec: SamplerSpec, n_samples: int = 100_000, n_se: float = 3.0,
                        rel_slack: float = 1e-12) -> BoundCheck:
    """Check ``E||x||**2**2 <= E||x||**4 <= C0 E||x||**2 <= C0**2`` with Monte Carlo.

    ``C0`` is the Monte Carlo estimate from :func:`assumption3_constant` at
    ``beta = 0`` (drawn from an independent stream).  Each link may be
    exceeded by ``n_se`` combined standard errors.
    """
    rep = moment_report(spec, n_samples, spec.stream(0))
    c0 = assumption3_constant(spec, 0.0, n_samples=n_samples, stream=spec.stream(1))
    m2, s2, m4, s4 = rep.m2, rep.m2_se, rep.m4, rep.m4_se
    C, sC = c0.ratio, c0.stderr
    links = [
        ("m2^2<=m4", m2 * m2, m4, math.hypot(2 * m2 * s2, s4)),
        ("m4<=C0*m2", m4, C * m2, math.hypot(s4, math.hypot(C * s2, m2 * sC))),
        ("C0*m2<=C0^2", C * m2, C * C, math.hypot(C * s2, (2 * C - m2) * sC)),
    ]
    violations = 0
    worst = math.inf
    margins = {}
    for name, lhs, rhs, se in links:
        margin = rhs + n_se * se - lhs
        margins[name] = margin
        worst = min(worst, margin)
        if lhs > rhs + n_se * se + rel_slack * max(abs(lhs), abs(rhs)):
            violations += 1
    return BoundCheck("moment_bound", (spec.kind, n_samples), violations, worst,
                      {"m2": m2, "m4": m4, "C0": C, "margins": margins})
