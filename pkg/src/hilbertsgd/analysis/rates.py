from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from scipy import stats

DEFAULT_WINDOW = (100, 10_000)


@dataclass(frozen=True)
class RateEstimate:
    """Slope of ``log value`` against ``log n`` over a window of recorded steps."""

    exponent: float
    stderr: float
    window: tuple
    points_used: int
    intercept: float = 0.0

    def prefactor(self) -> float:
        return float(np.exp(self.intercept))


def _as_arrays(series, values=None):
    if values is not None:
        return np.asarray(series, dtype=float), np.asarray(values, dtype=float)
    if isinstance(series, Mapping):
        items = sorted(series.items())
        return (np.array([k for k, _ in items], dtype=float),
                np.array([v for _, v in items], dtype=float))
    n, v = series
    return np.asarray(n, dtype=float), np.asarray(v, dtype=float)


def fit_decay_rate(series, values=None, window=DEFAULT_WINDOW) -> RateEstimate:
    """Least-squares fit of ``log v(n) = a + exponent * log n``.

    ``series`` is either a mapping ``n -> v`` or, with ``values`` given, the
    array of steps.  Only points with ``window[0] <= n <= window[1]`` are
    used; at least three are required and all must be positive.
    """
    n, v = _as_arrays(series, values)
    lo, hi = window
    if not lo < hi:
        raise ValueError("window must satisfy n_min < n_max")
    sel = (n >= lo) & (n <= hi)
    n, v = n[sel], v[sel]
    if n.size < 3:
        raise ValueError(f"need at least 3 points in window {window}, got {n.size}")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise ValueError("values in the fit window must be finite and positive")
    res = stats.linregress(np.log(n), np.log(v))
    return RateEstimate(float(res.slope), float(res.stderr), (lo, hi), int(n.size),
                        float(res.intercept))
