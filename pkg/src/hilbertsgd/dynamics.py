"""Stochastic iteration ``theta(n+1) = theta(n) - gamma <theta(n), x(n)> x(n)``.

Replicas are advanced together as rows of one array, but every replica draws
from its own :class:`~hilbertsgd.sampler.SampleStream`, so its path depends
only on ``(seed, replica)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import InvalidParameterError, as_vector, phi_norm, phi_norms
from .sampler import SamplerSpec, atoms, mean_se, sample, third_term

__all__ = [
    "DIVERGENCE_THRESHOLD",
    "geometric_schedule",
    "IterationConfig",
    "Trajectory",
    "EnsembleStats",
    "sgd_trajectory",
    "ensemble",
    "mean_iterate",
    "RecursionCheck",
    "recursion_check",
    "MartingaleStats",
    "h_value",
    "martingale_diagnostic",
]

DIVERGENCE_THRESHOLD = 1e150
_DRAW_BATCH = 256
_MAX_BLOCK_FLOATS = 4_000_000


def geometric_schedule(n_steps: int, ratio: float = 1.2) -> np.ndarray:
    """Recording steps ``{0, ceil(ratio**k), n_steps}``, strictly increasing."""
    if n_steps < 1:
        raise InvalidParameterError("n_steps must be >= 1")
    if ratio <= 1:
        raise InvalidParameterError("schedule ratio must exceed 1")
    steps = {0, n_steps}
    k = 0
    while True:
        v = math.ceil(ratio**k - 1e-9)
        if v >= n_steps:
            break
        steps.add(v)
        k += 1
    return np.array(sorted(steps), dtype=np.int64)


@dataclass(frozen=True)
class IterationConfig:
    gamma: float
    n_steps: int
    theta0: np.ndarray
    sampler: SamplerSpec
    n_replicas: int = 1
    record_betas: tuple = (0.0,)
    schedule: np.ndarray | None = None
    ratio: float = 1.2

    def __post_init__(self):
        if not self.gamma >= 0:
            raise InvalidParameterError("gamma must be >= 0")
        if self.n_steps < 1 or self.n_replicas < 1:
            raise InvalidParameterError("n_steps and n_replicas must be >= 1")
        theta0 = as_vector(self.theta0, self.sampler.spectrum).copy()
        theta0.setflags(write=False)
        object.__setattr__(self, "theta0", theta0)
        object.__setattr__(self, "record_betas", tuple(float(b) for b in self.record_betas))
        sched = (geometric_schedule(self.n_steps, self.ratio) if self.schedule is None
                 else np.asarray(self.schedule, dtype=np.int64))
        if (sched.ndim != 1 or sched[0] != 0 or sched[-1] != self.n_steps
                or np.any(np.diff(sched) <= 0)):
            raise InvalidParameterError(
                "schedule must be strictly increasing from 0 to n_steps")
        sched.setflags(write=False)
        object.__setattr__(self, "schedule", sched)

    @property
    def spectrum(self):
        return self.sampler.spectrum


@dataclass
class _Run:
    phi: dict  # beta -> (n_records, R)
    theta_sum: np.ndarray  # (n_records, d) sum of survivors' theta
    theta_sq_sum: np.ndarray
    survivors: np.ndarray  # (n_records,) counts
    monotone: np.ndarray  # (R,) bool
    diverged: np.ndarray  # (R,) bool
    diverged_at: np.ndarray  # (R,) step or -1
    martingale: dict  # step -> (R,) values (nan if undefined)


def _simulate(config: IterationConfig, replicas, martingale_steps=()) -> _Run:
    spec = config.sampler
    sp = spec.spectrum
    d = sp.dim
    replicas = list(replicas)
    R = len(replicas)
    sched = config.schedule
    record_at = {int(n): k for k, n in enumerate(sched)}
    m_steps = set(int(n) for n in martingale_steps)
    lam = sp.eigenvalues
    gamma = config.gamma

    atom_sq = None
    if spec.kind == "coordinate-bounded":
        p_atoms, _ = atoms(sp)
        atom_sq = lam / p_atoms
    streams = [spec.stream(r) for r in replicas]
    theta = np.tile(config.theta0, (R, 1))
    norm_sq = np.sum(theta * theta, axis=1)
    alive = np.ones(R, dtype=bool)
    monotone = np.ones(R, dtype=bool)
    diverged_at = np.full(R, -1, dtype=np.int64)
    n_rec = sched.size
    phi = {b: np.full((n_rec, R), np.nan) for b in config.record_betas}
    theta_sum = np.zeros((n_rec, d))
    theta_sq_sum = np.zeros((n_rec, d))
    survivors = np.zeros(n_rec, dtype=np.int64)
    martingale = {}

    def record(k):
        rows = theta[alive]
        for b in config.record_betas:
            vals = np.full(R, np.nan)
            vals[alive] = phi_norms(rows, sp, b)
            phi[b][k] = vals
        theta_sum[k] = rows.sum(axis=0)
        theta_sq_sum[k] = (rows * rows).sum(axis=0)
        survivors[k] = rows.shape[0]

    batch = max(1, min(_DRAW_BATCH, _MAX_BLOCK_FLOATS // max(R * d, 1)))
    block = None
    pos = batch
    n = 0
    record(record_at[0])
    while n < config.n_steps:
        if pos == batch:
            m = min(batch, config.n_steps - n)
            block = np.stack([sample(spec, s, m) for s in streams], axis=1)
            pos = 0
        x = block[pos]
        pos += 1
        if n in m_steps:
            with np.errstate(invalid="ignore", divide="ignore"):
                nrm = np.sqrt(norm_sq)
                z = theta / nrm[:, None]
                if atom_sq is None:
                    proj_sq = np.sum(z * x, axis=1) ** 2
                else:
                    # squared atom weight taken directly, avoiding the sqrt round trip
                    idx = np.argmax(x != 0, axis=1)
                    zi = z[np.arange(R), idx]
                    proj_sq = zi * zi * atom_sq[idx]
                h = (z * z) @ lam
                vals = proj_sq - h
            vals[~alive | (nrm == 0)] = np.nan
            martingale[n] = vals
        if gamma != 0:
            c = gamma * np.sum(theta * x, axis=1)
            theta -= c[:, None] * x
            new_norm = np.sum(theta * theta, axis=1)
            monotone &= ~(alive & (new_norm > norm_sq))
            norm_sq = new_norm
            bad = alive & ~(np.all(np.abs(theta) <= DIVERGENCE_THRESHOLD, axis=1))
            if bad.any():
                diverged_at[bad] = n + 1
                alive &= ~bad
                theta[bad] = 0.0
                norm_sq[bad] = 0.0
        n += 1
        if n in record_at:
            record(record_at[n])
    return _Run(phi, theta_sum, theta_sq_sum, survivors, monotone, ~alive & (diverged_at >= 0),
                diverged_at, martingale)


@dataclass(frozen=True)
class Trajectory:
    replica: int
    steps: np.ndarray
    phi: dict  # beta -> array over steps
    monotone: bool
    diverged: bool
    diverged_at: int | None


def sgd_trajectory(config: IterationConfig, replica: int = 0) -> Trajectory:
    """Run one replica and return ``phi_beta(theta(n))`` at the scheduled steps.

    A replica whose coefficients exceed ``DIVERGENCE_THRESHOLD`` is marked
    diverged; its records after that step are ``nan``.
    """
    run = _simulate(config, [replica])
    at = int(run.diverged_at[0])
    return Trajectory(replica, config.schedule, {b: v[:, 0] for b, v in run.phi.items()},
                      bool(run.monotone[0]), bool(run.diverged[0]), at if at >= 0 else None)


@dataclass(frozen=True)
class EnsembleStats:
    """Cross-replica means of ``phi_beta(theta(n))`` at the recorded steps."""

    config: IterationConfig
    steps: np.ndarray
    mean: dict  # beta -> array
    stderr: dict
    count: np.ndarray
    theta_mean: np.ndarray  # (n_records, d)
    theta_se: np.ndarray
    monotone: np.ndarray  # per replica, ||theta(n)||**2 never increased
    diverged: tuple  # replica indices

    @property
    def n_diverged(self):
        return len(self.diverged)

    def series(self, beta: float):
        beta = float(beta)
        return self.steps, self.mean[beta], self.stderr[beta]

    def mean_iterate_zscores(self) -> np.ndarray:
        """``(E-hat theta(n) - T^n theta0) / SE`` per recorded step and coordinate."""
        cfg = self.config
        target = np.array([mean_iterate(cfg.theta0, cfg.spectrum, cfg.gamma, int(n))
                           for n in self.steps])
        diff = self.theta_mean - target
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(self.theta_se > 0, diff / self.theta_se,
                         np.where(diff == 0, 0.0, np.inf))
        return z


def ensemble(config: IterationConfig) -> EnsembleStats:
    """Run ``config.n_replicas`` replicas and aggregate in replica order.

    Diverged replicas are excluded from the averages and listed in ``diverged``.
    With a single replica the standard errors are 0 by convention.
    """
    run = _simulate(config, range(config.n_replicas))
    means, ses = {}, {}
    for b, vals in run.phi.items():
        m = np.empty(vals.shape[0])
        s = np.empty(vals.shape[0])
        for k, row in enumerate(vals):
            row = row[~np.isnan(row)]
            m[k], s[k] = mean_se(row) if row.size else (math.nan, math.nan)
        means[b], ses[b] = m, s
    cnt = np.maximum(run.survivors, 1)[:, None]
    tmean = run.theta_sum / cnt
    var = np.maximum(run.theta_sq_sum / cnt - tmean**2, 0.0)
    nn = run.survivors[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        tse = np.where(nn > 1, np.sqrt(var * nn / np.maximum(nn - 1, 1) / np.maximum(nn, 1)), 0.0)
    diverged = tuple(int(i) for i in np.flatnonzero(run.diverged))
    return EnsembleStats(config, config.schedule, means, ses, run.survivors, tmean, tse,
                         run.monotone, diverged)


def mean_iterate(theta0, spec, gamma: float, n: int) -> np.ndarray:
    """``T^n theta0``: coefficients ``(1 - gamma lambda_i)**n theta_i``."""
    theta0 = as_vector(theta0, spec)
    if n < 0:
        raise InvalidParameterError("n must be >= 0")
    if n == 0:
        return theta0.copy()
    mu = gamma * spec.eigenvalues
    if np.any(mu >= 1):
        raise InvalidParameterError("mean iterate needs gamma * lambda_i < 1")
    return np.exp(n * np.log1p(-mu)) * theta0


@dataclass(frozen=True)
class RecursionCheck:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    rhs_exact: float
    exact: bool

    @property
    def discrepancy(self) -> float:
        return self.lhs - self.rhs

    @property
    def discrepancy_se(self) -> float:
        """Discrepancy in combined standard errors (0/0 counts as 0)."""
        se = math.hypot(self.lhs_se, self.rhs_se)
        if se == 0:
            return 0.0 if self.discrepancy == 0 else math.inf
        return abs(self.discrepancy) / se

    @property
    def relative_discrepancy(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs))
        return 0.0 if scale == 0 else abs(self.discrepancy) / scale


def recursion_check(theta, spec: SamplerSpec, gamma: float, beta: float,
                    n_samples: int = 100_000, replica: int = 0) -> RecursionCheck:
    """Compare both sides of the one-step identity

    ``E phi_beta(T_x theta) = phi_beta(theta) - 2 gamma phi_{beta-1}(theta)
    + gamma**2 E[<theta, x>**2 phi_beta(x)]``.

    For the coordinate-bounded sampler both sides are computed exactly by
    summing over the atoms.  Otherwise the left side and the expectation on
    the right are estimated from two independent sample sets.
    """
    sp = spec.spectrum
    theta = as_vector(theta, sp)
    base = phi_norm(theta, sp, beta)
    drift = phi_norm(theta, sp, beta - 1.0)
    if not (math.isfinite(base) and math.isfinite(drift)):
        raise InvalidParameterError("phi_beta(theta) and phi_(beta-1)(theta) must be finite")
    exact_third = third_term(theta, spec, beta)
    rhs_exact = base - 2 * gamma * drift + gamma**2 * exact_third

    if spec.kind == "coordinate-bounded":
        p, amp = atoms(sp)
        d = sp.dim
        xs = np.diag(amp)
        c = gamma * theta * amp  # gamma <theta, a_j e_j>
        after = np.tile(theta, (d, 1)) - c[:, None] * xs
        lhs = math.fsum(p * phi_norms(after, sp, beta))
        return RecursionCheck(lhs, 0.0, rhs_exact, 0.0, rhs_exact, True)

    w = np.exp(-beta * sp.log_eigenvalues)
    stream = spec.stream(replica)
    x_left = sample(spec, stream, n_samples)
    x_right = sample(spec, stream, n_samples)
    c = gamma * (x_left @ theta)
    after = theta[None, :] - c[:, None] * x_left
    lhs, lhs_se = mean_se(phi_norms(after, sp, beta))
    third, third_se = mean_se((x_right @ theta) ** 2 * ((x_right**2) @ w))
    rhs = base - 2 * gamma * drift + gamma**2 * third
    return RecursionCheck(lhs, lhs_se, rhs, gamma**2 * third_se, rhs_exact, False)


@dataclass(frozen=True)
class MartingaleStats:
    steps: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    count: np.ndarray
    values: dict = field(repr=False, default_factory=dict)


def h_value(z, spec) -> float:
    """``h(z) = E<z, x>**2 = sum lambda_i z_i**2``."""
    return phi_norm(z, spec, -1.0)


def martingale_diagnostic(config: IterationConfig, steps=None) -> MartingaleStats:
    """Cross-replica mean of ``M_n = <z_n, x(n)>**2 - h(z_n)``, ``z_n = theta(n)/||theta(n)||``.

    ``h(z) = sum lambda_i z_i**2``.  Replicas where ``theta(n) = 0`` contribute
    nothing at that step.
    """
    if not np.any(config.theta0 != 0):
        raise InvalidParameterError("martingale diagnostic needs theta0 != 0")
    steps = np.asarray(config.schedule[:-1] if steps is None else steps, dtype=np.int64)
    if np.any(steps < 0) or np.any(steps >= config.n_steps):
        raise InvalidParameterError("martingale steps must lie in [0, n_steps)")
    run = _simulate(config, range(config.n_replicas), martingale_steps=steps)
    means, ses, counts = [], [], []
    for n in steps:
        v = run.martingale[int(n)]
        v = v[~np.isnan(v)]
        m, s = mean_se(v) if v.size else (math.nan, math.nan)
        means.append(m)
        ses.append(s)
        counts.append(v.size)
    return MartingaleStats(steps, np.array(means), np.array(ses), np.array(counts),
                           run.martingale)
