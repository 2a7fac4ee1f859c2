"""Sturm-sequence counting and bisection for symmetric tridiagonal matrices.

The kernels work on the diagonal ``d`` and the squared off-diagonal ``e2``.
Only eigenvalues are computed, never eigenvectors.
"""
from __future__ import annotations

import math
import os

import numba
import numpy as np

from .exceptions import ParameterError

# flipping the sign of the pivot update is the negative control used by the
# validation suite; never set it outside of fault-injection runs
FAULT_ENV = "HARDEDGE_FAULT"
_FAULT_PIVOT = "sturm-pivot-sign"


def fault_flag() -> bool:
    return os.environ.get(FAULT_ENV, "") == _FAULT_PIVOT


@numba.njit(cache=True)
def _count(d, e2, sigma, guard, fault):
    n = d.shape[0]
    neg = 0
    q = d[0] - sigma
    if abs(q) < guard:
        q = -guard
    if q < 0.0:
        neg += 1
    for i in range(1, n):
        if fault:
            q = (d[i] - sigma) + e2[i - 1] / q
        else:
            q = (d[i] - sigma) - e2[i - 1] / q
        if abs(q) < guard:
            q = -guard
        if q < 0.0:
            neg += 1
    return neg


@numba.njit(cache=True)
def _gershgorin(d, e2):
    n = d.shape[0]
    lo = math.inf
    hi = -math.inf
    for i in range(n):
        r = 0.0
        if i > 0:
            r += math.sqrt(e2[i - 1])
        if i < n - 1:
            r += math.sqrt(e2[i])
        lo = min(lo, d[i] - r)
        hi = max(hi, d[i] + r)
    return lo, hi


@numba.njit(cache=True)
def _guard(d, e2):
    # LAPACK's pivmin: safe minimum scaled by the largest squared off-diagonal.
    # A guard proportional to eps * |T| is too coarse for graded matrices
    emax = 1.0
    for i in range(e2.shape[0]):
        emax = max(emax, e2[i])
    return 2.2250738585072014e-308 / 2.220446049250313e-16 * emax


@numba.njit(cache=True)
def _midpoint(lo, hi):
    # geometric steps while the bracket spans many orders of magnitude,
    # so tiny eigenvalues of badly graded matrices are found quickly
    if lo > 0.0 and hi > 8.0 * lo:
        return math.sqrt(lo * hi)
    if hi < 0.0 and lo < 8.0 * hi:
        return -math.sqrt(lo * hi)
    if lo == 0.0 and hi > 0.0:
        return hi * 0.00390625
    if hi == 0.0 and lo < 0.0:
        return lo * 0.00390625
    return 0.5 * (lo + hi)


@numba.njit(cache=True)
def _kth(d, e2, j, lo, hi, tol, rtol, guard, fault):
    # invariant: count(lo) <= j < count(hi)
    if lo < 0.0 < hi:
        if _count(d, e2, 0.0, guard, fault) > j:
            hi = 0.0
        else:
            lo = 0.0
    for _ in range(20000):
        width = hi - lo
        if width <= tol or width <= rtol * max(abs(lo), abs(hi)):
            break
        mid = _midpoint(lo, hi)
        if not (lo < mid < hi):
            break
        if _count(d, e2, mid, guard, fault) > j:
            hi = mid
        else:
            lo = mid
    return lo, hi


@numba.njit(cache=True)
def _smallest(d, e2, k, tol, rtol, fault):
    lo, hi = _gershgorin(d, e2)
    span = max(hi - lo, 1e-300)
    lo -= 1e-12 * span + 1e-300
    hi += 1e-12 * span + 1e-300
    guard = _guard(d, e2)
    out = np.empty(k)
    for j in range(k):
        # the final lower end of bracket j is a valid lower end for j + 1
        lo, top = _kth(d, e2, j, lo, hi, tol, rtol, guard, fault)
        out[j] = 0.5 * (lo + top)
    return out


def _as_arrays(T):
    d = np.ascontiguousarray(T.diag, dtype=float)
    e = np.ascontiguousarray(T.offdiag, dtype=float)
    return d, e * e


def sturm_count(T, sigma: float, *, fault: bool | None = None) -> int:
    """Number of eigenvalues of ``T`` strictly below ``sigma``.

    Uses the shifted pivot recursion ``q_1 = d_1 - sigma``,
    ``q_i = (d_i - sigma) - e_{i-1}**2 / q_{i-1}`` and counts negative pivots.
    Pivots smaller in magnitude than ``pivmin = (tiny / eps) * max(1, e_max**2)``
    are replaced by ``-pivmin``, as in LAPACK's ``dstebz``.

    Parameters
    ----------
    T : SymmetricTridiagonal
    sigma : float
    fault : bool, optional
        Fault-injection switch; defaults to the ``HARDEDGE_FAULT`` variable.

    Returns
    -------
    int
    """
    d, e2 = _as_arrays(T)
    f = fault_flag() if fault is None else fault
    return int(_count(d, e2, float(sigma), _guard(d, e2), f))


def smallest_eigenvalues(T, k: int, tol: float = 1e-13, *, rtol: float = 0.0,
                         fault: bool | None = None) -> np.ndarray:
    """The ``k`` smallest eigenvalues of a symmetric tridiagonal matrix.

    Each eigenvalue is bracketed by bisection on the Sturm count, starting
    from Gershgorin bounds, until the bracket is narrower than ``tol`` (or
    ``rtol`` times its magnitude, or until floating point cannot split it).

    Parameters
    ----------
    T : SymmetricTridiagonal
    k : int
        Number of eigenvalues, ``1 <= k <= n``.
    tol : float
        Absolute bracket width.
    rtol : float, default 0
        Optional relative bracket width.

    Returns
    -------
    ndarray of shape (k,)
        Increasing eigenvalues.
    """
    d, e2 = _as_arrays(T)
    if not 1 <= k <= d.size:
        raise ParameterError(f"need 1 <= k <= n = {d.size}, got k = {k}")
    if not tol > 0:
        raise ParameterError("tol must be positive")
    f = fault_flag() if fault is None else fault
    return _smallest(d, e2, int(k), float(tol), float(rtol), f)
