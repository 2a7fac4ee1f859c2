"""Bessel functions of the first kind and their positive zeros.

``J_a`` is evaluated by its ascending series for moderate arguments and by
the Hankel asymptotic expansion for large ones. Zeros are located by a
sign-change scan followed by bisection.
"""
from __future__ import annotations

import math

from .exceptions import ConvergenceError, ParameterError

_SERIES_MAX = 12.0


def _series(a: float, x: float) -> float:
    half = 0.5 * x
    term = math.exp(a * math.log(half) - math.lgamma(a + 1)) if x > 0 else (1.0 if a == 0 else 0.0)
    total = term
    q = half * half
    for m in range(1, 500):
        term *= -q / (m * (m + a))
        total += term
        if abs(term) < 1e-17 * abs(total):
            return total
    raise ConvergenceError("Bessel series did not converge")


def _hankel(a: float, x: float) -> float:
    mu = 4.0 * a * a
    p, q = 1.0, 0.0
    term = 1.0
    prev = math.inf
    for k in range(1, 200):
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) >= prev:
            break  # asymptotic series starts to diverge
        prev = abs(term)
        if k % 2 == 1:
            q += term if (k // 2) % 2 == 0 else -term
        else:
            p += -term if (k // 2) % 2 == 1 else term
        if abs(term) < 1e-17:
            break
    chi = x - (0.5 * a + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) - q * math.sin(chi))


def bessel_j(a: float, x: float) -> float:
    """Bessel function ``J_a(x)`` for ``a > -1`` and ``x >= 0``.

    Accurate to about ``1e-11`` absolute for ``|a| <= 5``.
    """
    if x < 0:
        raise ParameterError("x must be nonnegative")
    if x <= _SERIES_MAX + abs(a):
        return _series(a, x)
    return _hankel(a, x)


def bessel_zeros(a: float, k: int, *, step: float = 0.05, rtol: float = 1e-14) -> list[float]:
    """The first ``k`` positive zeros ``j_{a,1} < ... < j_{a,k}`` of ``J_a``.

    Parameters
    ----------
    a : float
        Order, greater than -1.
    k : int
        Number of zeros, at least 1.
    step : float
        Scan step for sign changes. Consecutive zeros are more than ``step``
        apart for every order above -1 except very close to -1.
    rtol : float
        Relative bisection tolerance.
    """
    if not a > -1:
        raise ParameterError("order must exceed -1")
    if k < 1:
        raise ParameterError("k must be at least 1")
    zeros = []
    # J_a(x) ~ (x/2)^a / Gamma(a+1) > 0 near 0, so start just above 0
    lo = min(step, 1e-3)
    flo = bessel_j(a, lo)
    while len(zeros) < k:
        hi = lo + step
        fhi = bessel_j(a, hi)
        if flo == 0.0:
            zeros.append(lo)
        elif flo * fhi < 0:
            zeros.append(_bisect(a, lo, hi, flo, rtol))
        lo, flo = hi, fhi
        if lo > 1e4 + 10 * k:
            raise ConvergenceError("zero scan ran past its range")
    return zeros


def _bisect(a, lo, hi, flo, rtol):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rtol * mid or not lo < mid < hi:
            return mid
        fm = bessel_j(a, mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bessel_zero(a: float, k: int) -> float:
    """The ``k``-th positive zero ``j_{a,k}`` of ``J_a``."""
    return bessel_zeros(a, k)[-1]
