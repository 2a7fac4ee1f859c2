"""Empirical distributions and goodness-of-fit helpers."""
from __future__ import annotations

import math

import numpy as np

from .exceptions import ParameterError


class EmpiricalDistribution:
    """Sorted sample set with CDF, quantile and Kolmogorov-Smirnov queries.

    Parameters
    ----------
    samples : array_like
        At least one finite sample.
    """

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        if x.size == 0:
            raise ParameterError("empirical distribution needs at least one sample")
        x.setflags(write=False)
        self._x = x

    @property
    def samples(self) -> np.ndarray:
        return self._x

    @property
    def n(self) -> int:
        return self._x.size

    def __len__(self):
        return self._x.size

    def cdf(self, x):
        """Fraction of samples ``<= x`` (right-continuous)."""
        out = np.searchsorted(self._x, x, side="right") / self._x.size
        return float(out) if np.ndim(out) == 0 else out

    def cdf_left(self, x):
        """Fraction of samples ``< x``."""
        out = np.searchsorted(self._x, x, side="left") / self._x.size
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, q: float) -> float:
        """Lower order-statistic quantile ``x_(floor(q (n-1)))`` (0-based)."""
        if not 0.0 <= q <= 1.0:
            raise ParameterError("quantile level must lie in [0, 1]")
        return float(self._x[int(math.floor(q * (self._x.size - 1)))])

    def ks_distance(self, reference_cdf) -> float:
        """Kolmogorov-Smirnov distance to a reference CDF.

        The supremum is taken over both one-sided limits at every sample
        point, so atoms of the reference are handled.
        """
        x = np.unique(self._x)
        f_right = self.cdf(x)
        f_left = self.cdf_left(x)
        g_right = np.asarray(reference_cdf(x), dtype=float)
        g_left = np.asarray(reference_cdf(np.nextafter(x, -np.inf)), dtype=float)
        return float(max(np.max(np.abs(f_right - g_right)), np.max(np.abs(f_left - g_left))))

    def ks_two_sample(self, other: "EmpiricalDistribution") -> float:
        """Exact two-sample KS distance between two empirical laws."""
        x = np.union1d(self._x, other._x)
        return float(np.max(np.abs(self.cdf(x) - other.cdf(x))))

    def mean(self) -> float:
        return float(self._x.mean())

    def __repr__(self):
        return f"EmpiricalDistribution(n={self.n})"


def cdf(d: EmpiricalDistribution, x):
    return d.cdf(x)


def quantile(d: EmpiricalDistribution, q: float) -> float:
    return d.quantile(q)


def ks_distance(d: EmpiricalDistribution, reference_cdf) -> float:
    return d.ks_distance(reference_cdf)


def dkw_band(n: int, alpha: float) -> float:
    """Half-width ``sqrt(log(2/alpha) / (2n))`` of the DKW confidence band."""
    if n < 1 or not 0.0 < alpha < 1.0:
        raise ParameterError("dkw_band needs n >= 1 and 0 < alpha < 1")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def exponential_cdf(rate: float = 1.0):
    """CDF of the exponential law with the given rate."""
    return lambda x: -np.expm1(-rate * np.maximum(x, 0.0))


def binomial_se(p: float, n: int) -> float:
    """Standard error of a proportion estimated from ``n`` trials."""
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)
