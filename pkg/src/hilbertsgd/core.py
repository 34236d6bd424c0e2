"""Truncated Hilbert-space arithmetic in the eigenbasis of the covariance operator.

Vectors are plain 1-D float arrays holding coefficients in the orthonormal
eigenbasis of ``S``; a :class:`Spectrum` carries the eigenvalues.  Everything
is diagonal, so ``S**kappa`` acts coefficient-wise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "InvalidParameterError",
    "DimensionMismatchError",
    "Spectrum",
    "RegularityReport",
    "make_spectrum",
    "as_vector",
    "basis_vector",
    "power_law_vector",
    "inner",
    "phi_norm",
    "phi_norms",
    "apply_S_pow",
    "apply_S_x",
    "apply_T_x",
    "regularity",
    "DIVERGENCE_RATIO",
]

FAMILIES = ("power-law", "geometric", "explicit")

# Growth ratio between partial sums at d/2 and d above which a series is
# flagged as divergent.
DIVERGENCE_RATIO = 1.05


class InvalidParameterError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of ``S``, non-increasing and inside (0, 1/2).

    ``scale`` is the factor applied by :func:`make_spectrum` to bring the
    largest eigenvalue below 1/2 (1.0 when no rescaling was needed).
    """

    eigenvalues: np.ndarray
    family: str = "explicit"
    params: tuple = ()
    scale: float = 1.0
    log_eigenvalues: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size < 1:
            raise InvalidParameterError("spectrum needs at least one eigenvalue")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0) or np.any(lam >= 0.5):
            raise InvalidParameterError("eigenvalues must lie in (0, 1/2)")
        if np.any(np.diff(lam) > 0):
            raise InvalidParameterError("eigenvalues must be non-increasing")
        lam.setflags(write=False)
        log_lam = np.log(lam)
        log_lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "log_eigenvalues", log_lam)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def __len__(self):
        return self.dim

    def trace(self) -> float:
        """Sum of eigenvalues, i.e. E||x||^2 for any admissible sampler."""
        return math.fsum(self.eigenvalues)

    def K(self, beta: float) -> float:
        """``sum_i lambda_i**(1 - beta)`` (the mean of phi_beta(x))."""
        return math.fsum(np.exp((1.0 - beta) * self.log_eigenvalues))

    def truncate(self, d: int) -> "Spectrum":
        return Spectrum(self.eigenvalues[:d], self.family, self.params, self.scale)


@dataclass(frozen=True)
class RegularityReport:
    alpha_data: float | None
    alpha_theta: float | None = None
    theta_divergent: dict = field(default_factory=dict)
    data_divergent: dict = field(default_factory=dict)


def make_spectrum(family: str, params, d: int) -> Spectrum:
    """Build a spectrum of dimension ``d``.

    ``power-law``: ``params = (c, p)`` giving ``c * i**-p``.
    ``geometric``: ``params = (c, r)`` giving ``c * r**(i-1)``.
    ``explicit``: ``params`` is the list of eigenvalues (sorted, then truncated
    or required to have length ``d``).

    If the largest eigenvalue is >= 1/2 the whole spectrum is halved until it
    is not; halving is exact in binary floating point.
    """
    d = int(d)
    if d < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {d}")
    params = tuple(float(v) for v in params)
    i = np.arange(1, d + 1, dtype=float)
    if family == "power-law":
        if len(params) != 2:
            raise InvalidParameterError("power-law needs (c, p)")
        c, p = params
        if c <= 0 or p <= 0:
            raise InvalidParameterError("power-law needs c > 0 and p > 0")
        lam = c * i**-p
    elif family == "geometric":
        if len(params) != 2:
            raise InvalidParameterError("geometric needs (c, r)")
        c, r = params
        if c <= 0 or not 0 < r <= 1:
            raise InvalidParameterError("geometric needs c > 0 and 0 < r <= 1")
        lam = c * r ** (i - 1)
    elif family == "explicit":
        lam = np.sort(np.asarray(params, dtype=float))[::-1]
        if lam.size < d:
            raise InvalidParameterError(
                f"explicit spectrum has {lam.size} values, need {d}")
        lam = lam[:d]
        if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise InvalidParameterError("explicit eigenvalues must be positive")
    else:
        raise InvalidParameterError(f"unknown spectrum family {family!r}")
    if np.any(lam <= 0):
        # power-law / geometric underflow for huge d
        raise InvalidParameterError("eigenvalues underflowed to zero; reduce d")

    scale = 1.0
    while lam[0] * scale >= 0.5:
        scale *= 0.5
    return Spectrum(lam * scale, family, params, scale)


def as_vector(theta, spec: Spectrum | None = None) -> np.ndarray:
    v = np.asarray(theta, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D vector, got shape {v.shape}")
    if spec is not None and v.size != spec.dim:
        raise DimensionMismatchError(
            f"vector has length {v.size}, spectrum has dim {spec.dim}")
    if not np.all(np.isfinite(v)):
        raise InvalidParameterError("vector entries must be finite")
    return v


def basis_vector(i: int, d: int) -> np.ndarray:
    """Unit vector ``e_i`` with 1-based index ``i``."""
    e = np.zeros(d)
    e[i - 1] = 1.0
    return e


def power_law_vector(s: float, d: int, normalize: bool = True) -> np.ndarray:
    """``theta_i = i**-s``, optionally rescaled to unit Euclidean norm."""
    theta = np.arange(1, d + 1, dtype=float) ** -s
    if normalize:
        theta /= math.sqrt(math.fsum(theta * theta))
    return theta


def _check_pair(a, b):
    a = as_vector(a)
    b = as_vector(b)
    if a.size != b.size:
        raise DimensionMismatchError(f"lengths {a.size} and {b.size} differ")
    return a, b


def inner(a, b) -> float:
    """Compensated inner product, accumulated in index order."""
    a, b = _check_pair(a, b)
    return math.fsum((a * b).tolist())


def _phi_terms(theta: np.ndarray, spec: Spectrum, beta: float) -> np.ndarray:
    # lambda**-beta * theta**2 in log space; zero coefficients contribute 0
    with np.errstate(divide="ignore", over="ignore"):
        log_t = 2.0 * np.log(np.abs(theta)) - beta * spec.log_eigenvalues
        return np.exp(log_t)


def _fsum(terms) -> float:
    if isinstance(terms, np.ndarray):
        terms = terms.tolist()  # iterating python floats is much faster than numpy scalars
    try:
        return math.fsum(terms)
    except OverflowError:
        return math.inf


def phi_norm(theta, spec: Spectrum, beta: float) -> float:
    """``phi_beta(theta) = <theta, S**-beta theta> = sum lambda_i**-beta theta_i**2``.

    Returns ``inf`` when the value exceeds the float range.
    """
    theta = as_vector(theta, spec)
    return _fsum(_phi_terms(theta, spec, beta))


def phi_norms(thetas, spec: Spectrum, beta: float) -> np.ndarray:
    """Row-wise :func:`phi_norm` for a 2-D array of vectors."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2 or thetas.shape[1] != spec.dim:
        raise DimensionMismatchError(
            f"expected shape (n, {spec.dim}), got {thetas.shape}")
    terms = _phi_terms(thetas, spec, beta)
    return np.array([_fsum(row) for row in terms.tolist()])


def apply_S_pow(theta, spec: Spectrum, kappa: float) -> np.ndarray:
    """``S**kappa theta``, coefficient-wise ``lambda_i**kappa * theta_i``."""
    theta = as_vector(theta, spec)
    if kappa == 0:
        return theta.copy()
    with np.errstate(over="ignore"):
        return np.exp(kappa * spec.log_eigenvalues) * theta


def apply_S_x(theta, x) -> np.ndarray:
    """Rank-one map ``theta -> <theta, x> x``."""
    theta, x = _check_pair(theta, x)
    return inner(theta, x) * x


def apply_T_x(theta, x, gamma: float) -> np.ndarray:
    """``theta - gamma <theta, x> x``."""
    if gamma < 0:
        raise InvalidParameterError("gamma must be >= 0")
    theta, x = _check_pair(theta, x)
    c = gamma * inner(theta, x)
    if c == 0:
        return theta.copy()
    return theta - c * x


def _partial_sum_growth(terms: np.ndarray) -> float:
    d = terms.size
    half = max(d // 2, 1)
    s_half = _fsum(terms[:half])
    s_full = _fsum(terms)
    if s_half == 0:
        return 1.0 if s_full == 0 else math.inf
    return s_full / s_half


def regularity(spec: Spectrum, s: float | None = None, betas=(0.0, 0.5, 1.0),
               ratio: float = DIVERGENCE_RATIO) -> RegularityReport:
    """Regularity exponents of the spectrum (and of ``theta_i = i**-s``).

    Analytic exponents are known for power-law and geometric spectra; for
    explicit spectra they are ``None``.  The numeric flags mark, for each beta,
    whether the partial sums of ``sum lambda**-beta theta**2`` (theta flags)
    and ``sum lambda**(1-beta)`` (data flags) grow by more than ``ratio``
    between ``d/2`` and ``d``.
    """
    if s is not None and s <= 0.5:
        raise InvalidParameterError("theta family i**-s needs s > 1/2")
    alpha_data = alpha_theta = None
    if spec.family == "power-law":
        p = spec.params[1]
        alpha_data = 1.0 - 1.0 / p
        if s is not None:
            alpha_theta = (2.0 * s - 1.0) / p
    elif spec.family == "geometric":
        alpha_data = 1.0
        if s is not None:
            alpha_theta = math.inf

    theta_flags = {}
    data_flags = {}
    theta = power_law_vector(s, spec.dim, normalize=False) if s is not None else None
    for beta in betas:
        beta = float(beta)
        data_terms = np.exp((1.0 - beta) * spec.log_eigenvalues)
        data_flags[beta] = _partial_sum_growth(data_terms) > ratio
        if theta is not None:
            theta_flags[beta] = _partial_sum_growth(_phi_terms(theta, spec, beta)) > ratio
    return RegularityReport(alpha_data, alpha_theta, theta_flags, data_flags)
