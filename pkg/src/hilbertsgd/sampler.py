"""Feature-vector samplers tied to a spectrum, plus moment diagnostics.

Three kinds are available:

``gff``
    independent centred Gaussian coordinates with ``Var x_i = lambda_i``.
``gamma-sym``
    ``x_i = s_i * sqrt(y_i)`` with fair independent signs ``s_i`` and
    ``y_i ~ Gamma(shape=lambda_i, scale=1)``; ``E x_i**4 = lambda_i (1 + lambda_i)``.
``coordinate-bounded``
    a single atom ``sqrt(lambda_I / p_I) e_I`` with ``P(I = i) = p_i`` proportional
    to ``lambda_i``, so ``||x||**2`` equals the trace of ``S`` on every draw.

All three have ``E[S_x] = S``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    InvalidParameterError,
    Spectrum,
    as_vector,
    phi_norm,
    power_law_vector,
    regularity,
)

KINDS = ("gff", "gamma-sym", "coordinate-bounded")

__all__ = [
    "KINDS",
    "SamplerSpec",
    "SampleStream",
    "MomentReport",
    "Assumption3Estimate",
    "sample",
    "atoms",
    "fourth_moments",
    "third_term",
    "moment_report",
    "default_probes",
    "assumption3_constant",
    "mean_se",
]


@dataclass(frozen=True)
class SamplerSpec:
    kind: str
    spectrum: Spectrum
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown sampler kind {self.kind!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameterError("seed must be a 64-bit unsigned integer")

    @property
    def dim(self):
        return self.spectrum.dim

    def stream(self, replica: int = 0) -> "SampleStream":
        return SampleStream(self.seed, replica)


class SampleStream:
    """Random stream for one replica, keyed by ``(seed, replica)``.

    Two child generators are spawned so that every kind consumes each
    generator in a fixed per-element order; a stream therefore yields the same
    sequence of vectors however the draws are split into batches.
    """

    def __init__(self, seed: int, replica: int = 0):
        self.seed = int(seed)
        self.replica = int(replica)
        root = np.random.SeedSequence([self.seed, self.replica])
        main, aux = root.spawn(2)
        self.main = np.random.Generator(np.random.PCG64(main))
        self.aux = np.random.Generator(np.random.PCG64(aux))


def atoms(spectrum: Spectrum):
    """Support of the coordinate-bounded sampler: ``(p_i, amplitude_i)``."""
    lam = spectrum.eigenvalues
    p = lam / spectrum.trace()
    return p, np.sqrt(lam / p)


def sample(spec: SamplerSpec, stream: SampleStream, size: int | None = None) -> np.ndarray:
    """Draw one vector (``size=None``) or an array of ``size`` i.i.d. vectors."""
    n = 1 if size is None else int(size)
    lam = spec.spectrum.eigenvalues
    d = lam.size
    if spec.kind == "gff":
        x = stream.main.standard_normal((n, d)) * np.sqrt(lam)
    elif spec.kind == "gamma-sym":
        # numpy's standard_gamma handles shape < 1 by rejection (no boosting)
        y = stream.main.standard_gamma(np.broadcast_to(lam, (n, d)))
        signs = np.where(stream.aux.random((n, d)) < 0.5, -1.0, 1.0)
        x = signs * np.sqrt(y)
    else:
        p, amp = atoms(spec.spectrum)
        cdf = np.cumsum(p)
        u = stream.main.random(n) * cdf[-1]
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), d - 1)
        x = np.zeros((n, d))
        x[np.arange(n), idx] = amp[idx]
    return x[0] if size is None else x


def fourth_moments(spec: SamplerSpec) -> np.ndarray:
    """Per-coordinate ``E[x_i**4]``."""
    lam = spec.spectrum.eigenvalues
    if spec.kind == "gff":
        return 3.0 * lam**2
    if spec.kind == "gamma-sym":
        return lam * (1.0 + lam)
    p, amp = atoms(spec.spectrum)
    return p * amp**4


def third_term(theta, spec: SamplerSpec, beta: float) -> float:
    """Closed form of ``E[<theta, x>**2 phi_beta(x)]``.

    For the independent kinds this is
    ``phi_{-1}(theta) K_beta + sum theta_i**2 lambda_i**-beta (E x_i**4 - lambda_i**2)``;
    for the coordinate-bounded kind the finite support is enumerated.
    """
    sp = spec.spectrum
    theta = as_vector(theta, sp)
    lam = sp.eigenvalues
    w = np.exp(-beta * sp.log_eigenvalues)
    if spec.kind == "coordinate-bounded":
        p, amp = atoms(sp)
        # atom j: <theta, a_j e_j>**2 * lambda_j**-beta a_j**2
        return math.fsum(p * (theta * amp) ** 2 * w * amp**2)
    excess = fourth_moments(spec) - lam**2
    return (phi_norm(theta, sp, -1.0) * sp.K(beta)
            + math.fsum(theta**2 * w * excess))


def mean_se(values) -> tuple[float, float]:
    """Sample mean and its standard error; exact for constant samples."""
    v = np.asarray(values, dtype=float)
    n = v.size
    if n == 0:
        return math.nan, math.nan
    if np.all(v == v[0]):
        return float(v[0]), 0.0
    m = math.fsum(v.tolist()) / n
    if n < 2:
        return m, 0.0
    with np.errstate(over="ignore"):
        dev = (v - m) ** 2
    try:
        var = math.fsum(dev.tolist()) / (n - 1)
    except OverflowError:
        return m, math.inf
    return m, math.sqrt(var / n)


@dataclass(frozen=True)
class MomentReport:
    mean_sq_coords: np.ndarray
    mean_sq_se: np.ndarray
    pairs: np.ndarray
    cross_means: np.ndarray
    cross_se: np.ndarray
    m2: float
    m2_se: float
    m4: float
    m4_se: float
    delta: float
    n_samples: int

    @property
    def cross_corr(self) -> float:
        return float(np.max(np.abs(self.cross_means))) if self.cross_means.size else 0.0


def _column_mean_se(a: np.ndarray):
    n = a.shape[0]
    m = a.mean(axis=0)
    se = a.std(axis=0, ddof=1) / math.sqrt(n)
    return m, se


def _default_pairs(d: int) -> np.ndarray:
    pairs = [(i, i + 1) for i in range(d - 1)]
    pairs += [(0, j) for j in range(2, d)]
    return np.array(pairs, dtype=int).reshape(-1, 2)


def moment_report(spec: SamplerSpec, n_samples: int, stream: SampleStream | None = None,
                  pairs=None) -> MomentReport:
    """Monte Carlo moments of the sampler with standard errors.

    ``delta = min_i lambda_i`` is analytic: ``E<z, x>**2 = sum lambda_i z_i**2``
    for every kind.
    """
    if n_samples < 100:
        raise InvalidParameterError("moment_report needs n_samples >= 100")
    stream = stream or spec.stream(0)
    x = sample(spec, stream, n_samples)
    x2 = x * x
    msq, msq_se = _column_mean_se(x2)
    pairs = _default_pairs(spec.dim) if pairs is None else np.asarray(pairs, dtype=int)
    if pairs.size:
        prods = x[:, pairs[:, 0]] * x[:, pairs[:, 1]]
        cm, cse = _column_mean_se(prods)
    else:
        cm = cse = np.zeros(0)
    norm2 = x2.sum(axis=1)
    m2, m2_se = mean_se(norm2)
    m4, m4_se = mean_se(norm2**2)
    return MomentReport(msq, msq_se, pairs, cm, cse, m2, m2_se, m4, m4_se,
                        float(spec.spectrum.eigenvalues[-1]), n_samples)


def default_probes(spectrum: Spectrum, n_random: int = 32, seed: int = 0) -> np.ndarray:
    """All basis vectors plus ``n_random`` unit vectors ``+-i**-s`` with random ``s``."""
    d = spectrum.dim
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xA3]))
    probes = [np.eye(d)]
    if n_random:
        s = rng.uniform(0.6, 2.5, n_random)
        signs = np.where(rng.random((n_random, d)) < 0.5, -1.0, 1.0)
        rand = np.array([power_law_vector(sk, d) for sk in s]) * signs
        probes.append(rand)
    return np.vstack(probes)


@dataclass(frozen=True)
class Assumption3Estimate:
    ratio: float
    stderr: float
    argmax: int
    probe_ratios: np.ndarray
    probe_se: np.ndarray
    probe_exact: np.ndarray
    analytic: float | None
    skipped: int


def assumption3_constant(spec: SamplerSpec, beta: float, probes=None,
                         n_samples: int = 100_000, stream: SampleStream | None = None,
                         batch: int = 20_000) -> Assumption3Estimate:
    """Estimate the smallest ``C`` with ``E[<theta,x>**2 phi_beta(x)] <= C phi_{beta-1}(theta)``.

    The estimate is the supremum over ``probes`` of the Monte Carlo ratio; its
    standard error is that of the maximising probe.  ``probe_exact`` holds the
    closed-form ratio of every probe.  For ``gamma-sym`` the analytic constant
    ``K_beta + 1`` is returned as well.
    """
    sp = spec.spectrum
    rep = regularity(sp, betas=())
    if rep.alpha_data is not None and beta >= rep.alpha_data:
        raise InvalidParameterError(
            f"beta={beta} must be below the data exponent {rep.alpha_data}")
    if probes is None:
        probes = default_probes(sp, seed=spec.seed)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))

    denom = np.array([phi_norm(p, sp, beta - 1.0) for p in probes])
    keep = np.isfinite(denom) & (denom > 0)
    skipped = int(np.count_nonzero(~keep))
    if skipped:
        warnings.warn(f"skipping {skipped} probe(s) with phi_(beta-1) = 0 or inf")
    if not keep.any():
        raise InvalidParameterError("every probe was skipped")
    probes = probes[keep]
    denom = denom[keep]

    stream = stream or spec.stream(0)
    w = np.exp(-beta * sp.log_eigenvalues)
    sums = np.zeros(len(probes))
    sq_sums = np.zeros(len(probes))
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        x = sample(spec, stream, m)
        vals = (x @ probes.T) ** 2 * ((x * x) @ w)[:, None]
        sums += vals.sum(axis=0)
        sq_sums += (vals * vals).sum(axis=0)
        done += m
    mean = sums / n_samples
    var = np.maximum(sq_sums / n_samples - mean**2, 0.0) * n_samples / (n_samples - 1)
    ratios = mean / denom
    se = np.sqrt(var / n_samples) / denom
    exact = np.array([third_term(p, spec, beta) for p in probes]) / denom
    k = int(np.argmax(ratios))
    analytic = sp.K(beta) + 1.0 if spec.kind == "gamma-sym" else None
    return Assumption3Estimate(float(ratios[k]), float(se[k]), k, ratios, se, exact,
                               analytic, skipped)
