"""Upper and lower bounds on the mean iterate and on the stochastic second moment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import InvalidParameterError, Spectrum, as_vector, phi_norm
from ..dynamics import EnsembleStats, mean_iterate
from .rates import DEFAULT_WINDOW, RateEstimate, fit_decay_rate

__all__ = [
    "BoundCheck",
    "avg_upper_bound",
    "check_avg_upper_bound",
    "LowerBoundProbe",
    "lower_bound_probe",
    "SgdRateReport",
    "sgd_rate_report",
]

RATE_SLACK = 0.15


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of checking an inequality over a grid.

    ``worst_margin`` is the smallest ``bound - value`` seen (negative means a
    violation).
    """

    name: str
    grid: tuple
    violations: int
    worst_margin: float
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def avg_upper_bound(theta0, spec: Spectrum, gamma: float, beta: float, kappa: float,
                    n: int) -> float:
    """``exp(kappa - beta) * ((beta - kappa) / (2 n gamma))**(beta - kappa) * phi_beta(theta0)``.

    Upper bound on ``||T^n theta0||_kappa**2``; infinite at ``n = 0``.
    """
    if kappa >= beta:
        raise InvalidParameterError("the bound needs kappa < beta")
    if gamma <= 0:
        raise InvalidParameterError("the bound needs gamma > 0")
    return _bound_from_source(phi_norm(theta0, spec, beta), gamma, beta - kappa, n)


def _bound_from_source(src, gamma, tau, n):
    if n <= 0:
        return math.inf
    if src == 0:
        return 0.0
    if math.isinf(src):
        return math.inf
    log_b = -tau + tau * math.log(tau / (2.0 * n * gamma)) + math.log(src)
    return math.exp(log_b) if log_b < 709 else math.inf


def check_avg_upper_bound(theta0, spec: Spectrum, gamma: float, betas, kappa: float = 0.0,
                          steps=None, rel_slack: float = 1e-12) -> BoundCheck:
    """Check ``||T^n theta||_kappa**2 <= min(||theta||_kappa**2, bound_beta(n))`` on a grid."""
    theta0 = as_vector(theta0, spec)
    if gamma * spec.eigenvalues[0] >= 1:
        raise InvalidParameterError("needs gamma * lambda_1 < 1")
    steps = np.arange(1, 10_001) if steps is None else np.asarray(steps)
    start = phi_norm(theta0, spec, kappa)
    srcs = {b: phi_norm(theta0, spec, b) for b in betas}
    for b in betas:
        if kappa >= b:
            raise InvalidParameterError("the bound needs kappa < beta")
    violations = 0
    worst = math.inf
    for n, val in zip(steps, _mean_iterate_phi(theta0, spec, gamma, kappa, steps)):
        n = int(n)
        bounds = [start] + [_bound_from_source(srcs[b], gamma, b - kappa, n) for b in betas]
        for b in bounds:
            margin = b - val
            worst = min(worst, margin)
            if val > b * (1 + rel_slack):
                violations += 1
    return BoundCheck("avg_upper_bound", (tuple(betas), kappa, int(len(steps))),
                      violations, worst)


def _mean_iterate_phi(theta0, spec, gamma, kappa, steps, chunk=256):
    # phi_kappa(T^n theta0) for many n at once, summed with fsum per row
    l1p = np.log1p(-gamma * spec.eigenvalues)
    with np.errstate(divide="ignore"):
        base = 2.0 * np.log(np.abs(theta0)) - kappa * spec.log_eigenvalues
    steps = np.asarray(steps, dtype=float)
    out = np.empty(steps.size)
    for start in range(0, steps.size, chunk):
        ns = steps[start:start + chunk]
        terms = np.exp(base[None, :] + 2.0 * ns[:, None] * l1p[None, :])
        out[start:start + chunk] = [math.fsum(row) for row in terms.tolist()]
    return out


@dataclass(frozen=True)
class LowerBoundProbe:
    verdict: str
    growth: float
    steps: np.ndarray
    u: np.ndarray


def _t_sequence(n, t_choice: str, eps: float):
    n = np.asarray(n, dtype=float)
    if t_choice in ("power", "n^eps"):
        return n**eps
    if t_choice in ("log", "(log n)^(1+eps)"):
        return np.log(n) ** (1 + eps)
    raise InvalidParameterError(f"unknown t_n choice {t_choice!r}")


def lower_bound_probe(theta0, spec: Spectrum, gamma: float, beta: float, kappa: float = 0.0,
                      t_choice: str = "power", n_max: int = 100_000, eps: float = 0.1,
                      growth_factor: float = 2.0) -> LowerBoundProbe:
    """Test whether ``u(n) = n**(beta-kappa) t_n ||T^n theta0||_kappa**2`` stays bounded.

    The verdict is ``"unbounded"`` when ``u(n_max) / u(n_max / 10)`` is at
    least ``growth_factor``; this is a finite-horizon proxy, not a proof.
    """
    if kappa >= beta:
        raise InvalidParameterError("needs kappa < beta")
    if n_max < 100:
        raise InvalidParameterError("n_max must be at least 100")
    steps = np.unique(np.geomspace(10, n_max, 41).round().astype(np.int64))
    tn = _t_sequence(steps, t_choice, eps)
    vals = np.array([phi_norm(mean_iterate(theta0, spec, gamma, int(n)), spec, kappa)
                     for n in steps])
    u = steps.astype(float) ** (beta - kappa) * tn * vals
    last = u[-1]
    ref_n = n_max // 10
    ref = phi_norm(mean_iterate(theta0, spec, gamma, ref_n), spec, kappa)
    ref_u = ref_n ** (beta - kappa) * _t_sequence(ref_n, t_choice, eps) * ref
    if ref_u == 0:
        growth = 0.0 if last == 0 else math.inf
    else:
        growth = float(last / ref_u)
    verdict = "unbounded" if growth >= growth_factor else "bounded"
    return LowerBoundProbe(verdict, growth, steps, u)


@dataclass(frozen=True)
class SgdRateReport:
    rate: RateEstimate
    mean_iterate_rate: RateEstimate
    beta_target: float
    kappa: float
    slack: float
    jensen_min_z: float
    mean_iterate: np.ndarray

    @property
    def rate_ok(self) -> bool:
        return self.rate.exponent <= -(self.beta_target - self.kappa - self.slack)

    @property
    def jensen_ok(self) -> bool:
        return self.jensen_min_z >= -4.0

    @property
    def sandwich_ok(self) -> bool:
        return self.mean_iterate_rate.exponent <= self.rate.exponent + self.slack


def sgd_rate_report(stats: EnsembleStats, beta_target: float, window=DEFAULT_WINDOW,
                    kappa: float = 0.0, slack: float = RATE_SLACK) -> SgdRateReport:
    """Fit the decay of ``E phi_kappa(theta(n))`` and compare with the mean iterate.

    ``jensen_min_z`` is the smallest ``(E phi_kappa(theta(n)) - phi_kappa(T^n theta0)) / SE``
    over recorded steps; it must stay above -4.
    """
    kappa = float(kappa)
    if kappa not in stats.mean:
        raise InvalidParameterError(f"stats were not recorded at beta={kappa}")
    steps, mean, se = stats.series(kappa)
    cfg = stats.config
    if stats.config.gamma == 0:
        # nothing moves: both series are flat
        flat = RateEstimate(0.0, 0.0, tuple(window), int(np.sum((steps >= window[0]) & (steps <= window[1]))))
        mi = np.full(steps.size, phi_norm(cfg.theta0, cfg.spectrum, kappa))
        return SgdRateReport(flat, flat, beta_target, kappa, slack, 0.0, mi)
    rate = fit_decay_rate(steps, mean, window=window)
    mi = np.array([phi_norm(mean_iterate(cfg.theta0, cfg.spectrum, cfg.gamma, int(n)),
                            cfg.spectrum, kappa) for n in steps])
    mi_rate = fit_decay_rate(steps, mi, window=window)
    diff = mean - mi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / se, np.where(diff >= 0, 0.0, -np.inf))
    return SgdRateReport(rate, mi_rate, beta_target, kappa, slack, float(np.min(z)), mi)
