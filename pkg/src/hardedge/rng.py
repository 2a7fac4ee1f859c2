"""Counter-based random streams and Brownian path sampling.

Every stream is a Philox generator keyed by the pair ``(seed, stream_id)``.
Monte Carlo task ``i`` uses ``stream_id = i``, so results do not depend on
how tasks are distributed over workers.
"""
from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError

_U64 = 1 << 64


def derive_seed(seed: int, label: str) -> int:
    """Derive a 64-bit seed for a named sub-experiment.

    Parameters
    ----------
    seed : int
        Master seed.
    label : str
        Name of the sub-experiment.

    Returns
    -------
    int
        Seed in ``[0, 2**64)``, a fixed function of ``(seed, label)``.
    """
    digest = hashlib.sha256(f"{int(seed)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


class RandomStream:
    """Reproducible random source keyed by ``(seed, stream_id)``.

    Parameters
    ----------
    seed : int
        Master seed in ``[0, 2**64)``.
    stream_id : int, default 0
        Stream index in ``[0, 2**64)``.

    Notes
    -----
    The stream carries mutable generator state. Use :meth:`clone` to hand an
    independent copy to another worker and :meth:`reset` to replay from the
    beginning.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        seed, stream_id = int(seed), int(stream_id)
        if not (0 <= seed < _U64 and 0 <= stream_id < _U64):
            raise ParameterError("seed and stream_id must lie in [0, 2**64)")
        self.seed = seed
        self.stream_id = stream_id
        self.reset()

    def reset(self) -> None:
        """Rewind the stream to its first variate."""
        key = self.seed | (self.stream_id << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def clone(self) -> "RandomStream":
        """Independent copy with the same current state."""
        other = copy.copy(self)
        other._gen = copy.deepcopy(self._gen)
        return other

    def substream(self, stream_id: int) -> "RandomStream":
        """Fresh stream with the same seed and another id."""
        return RandomStream(self.seed, stream_id)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def uniform(self, size=None):
        return self._gen.random(size)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"


def sample_gaussian(stream: RandomStream) -> float:
    """Draw one standard normal variate."""
    return float(stream.normal())


def sample_chi(r, stream: RandomStream, size=None):
    """Draw chi variates of index ``r``.

    A chi variate of index ``r`` is the square root of a gamma variate with
    shape ``r/2`` and scale 2, so ``E[chi_r**p] = 2**(p/2) Gamma((r+p)/2) /
    Gamma(r/2)``. numpy's gamma sampler is exact for every positive shape,
    including shapes below one.

    Parameters
    ----------
    r : float or array_like
        Positive index (or indices, broadcast against ``size``).
    stream : RandomStream
    size : int or tuple, optional

    Returns
    -------
    float or ndarray
    """
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise ParameterError("chi index must be positive")
    out = np.sqrt(stream.generator.gamma(0.5 * r, 2.0, size=size))
    return float(out) if np.ndim(out) == 0 else out


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ParameterError("grid must be a non-empty 1-d sequence")
    if grid[0] != 0.0:
        raise ParameterError("grid must start at 0")
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must be strictly increasing")
    return grid


def brownian_increments(grid, stream: RandomStream) -> np.ndarray:
    """Independent increments ``N(0, dx_i)`` of a Brownian motion on ``grid``."""
    grid = _check_grid(grid)
    return np.sqrt(np.diff(grid)) * stream.normal(grid.size - 1)


@dataclass(frozen=True)
class EnvironmentPath:
    """Brownian path ``b`` sampled on an increasing grid with ``b(0) = 0``."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = _check_grid(self.grid)
        values = np.asarray(self.values, dtype=float)
        if values.shape != grid.shape:
            raise ParameterError("grid and values must have equal length")
        if values[0] != 0.0:
            raise ParameterError("path must start at b(0) = 0")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def sample(cls, grid, stream: RandomStream) -> "EnvironmentPath":
        """Sample a Brownian path on ``grid``."""
        grid = _check_grid(grid)
        values = np.concatenate(([0.0], np.cumsum(brownian_increments(grid, stream))))
        return cls(grid, values)

    @classmethod
    def zero(cls, grid) -> "EnvironmentPath":
        """Noise-free environment ``b = 0``."""
        grid = _check_grid(grid)
        return cls(grid, np.zeros_like(grid))

    @property
    def length(self) -> float:
        return float(self.grid[-1])

    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def restrict(self, L: float) -> "EnvironmentPath":
        """Restriction to ``[0, L]``; ``L`` must be a grid point."""
        i = int(np.searchsorted(self.grid, L * (1 - 1e-12)))
        if i >= self.grid.size or not np.isclose(self.grid[i], L, rtol=1e-12, atol=1e-14):
            raise ParameterError(f"L = {L} is not a grid point of the path")
        return EnvironmentPath(self.grid[: i + 1], self.values[: i + 1])

    def __call__(self, x):
        """Piecewise-linear interpolation of the sampled values."""
        return np.interp(x, self.grid, self.values)


def bridge_refine(path: EnvironmentPath, new_points, stream: RandomStream) -> EnvironmentPath:
    """Insert points into a path by conditional Brownian bridge sampling.

    Existing values are kept. Points already on the grid are ignored.

    Parameters
    ----------
    path : EnvironmentPath
    new_points : array_like
        Points inside ``[0, path.length]``.
    stream : RandomStream

    Returns
    -------
    EnvironmentPath
    """
    pts = np.unique(np.asarray(new_points, dtype=float))
    if pts.size and (pts[0] < 0.0 or pts[-1] > path.grid[-1]):
        raise ParameterError("refinement points must lie inside the path span")
    pts = pts[~np.isin(pts, path.grid)]
    if pts.size == 0:
        return path

    grid = np.union1d(path.grid, pts)
    old = np.isin(grid, path.grid)
    # free Brownian motion on the union grid, then pinned to the old values
    w = np.concatenate(([0.0], np.cumsum(np.sqrt(np.diff(grid)) * stream.normal(grid.size - 1))))
    left = np.searchsorted(path.grid, grid, side="right") - 1
    left = np.minimum(left, path.grid.size - 2)
    x0, x1 = path.grid[left], path.grid[left + 1]
    b0, b1 = path.values[left], path.values[left + 1]
    w0 = w[np.flatnonzero(old)][left]
    w1 = w[np.flatnonzero(old)][left + 1]
    frac = (grid - x0) / (x1 - x0)
    values = b0 + (w - w0) - frac * ((w1 - w0) - (b1 - b0))
    values[old] = path.values
    return EnvironmentPath(grid, values)
