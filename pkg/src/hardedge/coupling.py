"""Joint sampling of the finite-n model and the limiting operator.

The kernel of the conjugated model carries the partial sums
``sum_k (log chi~_{k beta} - log chi_{(k+a) beta})``, whose fluctuations
approach ``-(1/sqrt(beta)) bhat(log(n/k))`` for a Brownian path ``bhat``.
The sampler below draws one Brownian path on a grid containing every
``t_k = log(n/k)``. Then for each ``k`` it sets

    G_k = (b(t_k) - b(t_{k+1})) / sqrt(t_k - t_{k+1}),   W_k ~ N(0, 1),
    chi~_{k beta}     = F^{-1}_{k beta}(Phi((W_k - G_k) / sqrt(2))),
    chi_{(k+a) beta}  = F^{-1}_{(k+a) beta}(Phi((W_k + G_k) / sqrt(2))),

where ``F_r`` is the chi CDF. The two Gaussian arguments are independent
standard normals, so every chi entry has exactly its model law and all
entries are independent. Meanwhile the operator sees the same path. Both
marginal laws are exact; only their dependence is engineered, which makes
distance-between-laws estimates far less noisy than with independent
samples.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gammainccinv, gammaincinv, ndtr

from .ensemble import check_beta_a
from .exceptions import ParameterError
from .parallel import map_tasks
from .rng import EnvironmentPath, RandomStream
from .sbo import sbo_eigenvalues, uniform_grid
from .sturm import smallest_eigenvalues
from .ensemble import SymmetricTridiagonal


def chi_quantile(r, z) -> np.ndarray:
    """Chi variate of index ``r`` obtained from a standard normal ``z`` by inversion.

    Both tails are inverted through the regularized incomplete gamma
    function that keeps full relative accuracy there.
    """
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    r, z = np.broadcast_arrays(r, z)
    out = np.empty(z.shape)
    lo = z < 0
    out[lo] = np.sqrt(2.0 * gammaincinv(0.5 * r[lo], ndtr(z[lo])))
    out[~lo] = np.sqrt(2.0 * gammainccinv(0.5 * r[~lo], ndtr(-z[~lo])))
    return out


def _union_grid(ns, L, h):
    pts = [uniform_grid(L, h)]
    for n in ns:
        t = np.log(n / np.arange(n, 0, -1.0))
        if t[-1] > L:
            raise ParameterError(f"log(n) = {t[-1]:.3f} exceeds L = {L}")
        pts.append(t)
    return np.unique(np.concatenate(pts))


def _coupled_task(start, stop, beta, a, ns, L, h, seed):
    grid = _union_grid(ns, L, h)
    where = {n: np.searchsorted(grid, np.log(n / np.arange(n, 0, -1.0))) for n in ns}
    sd = np.sqrt(np.diff(grid))
    out = np.empty((stop - start, 1 + len(ns)))
    for i in range(start, stop):
        stream = RandomStream(seed, i)
        b = np.concatenate(([0.0], np.cumsum(sd * stream.normal(grid.size - 1))))
        out[i - start, 0] = sbo_eigenvalues(a, beta, L, h, 1, path=EnvironmentPath(grid, b))[0]
        for j, n in enumerate(ns):
            t = grid[where[n]]
            bt = b[where[n]]
            # entries ordered k = n-1, ..., 1
            G = np.diff(bt) / np.sqrt(np.diff(t))
            W = stream.normal(n - 1)
            k = np.arange(n - 1, 0, -1.0)
            sub = chi_quantile(k * beta, (W - G) / math.sqrt(2.0))
            dia = chi_quantile((k + a) * beta, (W + G) / math.sqrt(2.0))
            top = chi_quantile((n + a) * beta, stream.normal(1))
            # conjugated model, rows k = 1..n: diagonal chi_{(k+a) beta}, subdiagonal chi~_{k beta}
            md = np.concatenate((dia[::-1], top)) / math.sqrt(beta)
            ms = sub[::-1] / math.sqrt(beta)
            d = md * md
            d[1:] += ms * ms
            T = SymmetricTridiagonal(d, md[:-1] * ms)
            out[i - start, 1 + j] = n * smallest_eigenvalues(T, 1, tol=1e-300, rtol=4e-16)[0]
    return out


def coupled_minima(beta: float, a: float, ns, num_samples: int, seed: int, *, L: float = 12.0,
                   h: float = 2.0 ** -10, workers: int | None = None) -> np.ndarray:
    """Coupled draws of ``Lambda_0`` and ``n lambda_0`` for several ``n``.

    Parameters
    ----------
    beta, a : float
        Model parameters (finite ``beta``).
    ns : sequence of int
        Matrix sizes; ``log(n)`` must not exceed ``L``.
    num_samples : int
    seed : int
        Sample ``i`` uses ``RandomStream(seed, i)``.
    L, h : float
        Truncation and largest cell width for the operator.

    Returns
    -------
    ndarray, shape (num_samples, 1 + len(ns))
        Column 0 holds ``Lambda_0``, column ``1 + j`` holds ``n_j lambda_0``.
    """
    check_beta_a(beta, a)
    ns = [int(n) for n in ns]
    if any(n < 2 for n in ns):
        raise ParameterError("matrix sizes must be at least 2")
    if num_samples < 1:
        raise ParameterError("num_samples must be positive")
    return map_tasks(_coupled_task, num_samples, (beta, a, ns, L, h, seed), workers=workers)
