"""Discretized stochastic Bessel operator on a truncated half-line.

The operator is ``G f = -(1/m') (f' / s')'`` on ``[0, L]`` with speed and
scale densities

    m'(x) = exp(-(a+1) x - sigma b(x)),   s'(x) = exp(a x + sigma b(x)),

``sigma = 2 / sqrt(beta)`` and ``b`` a Brownian path. It is discretized as a
birth-death chain: cell integrals of ``m'`` and ``s'`` by the trapezoid rule,
conductances ``1 / int_cell s'``, and nodal masses lumped from half cells.
The left end carries a Dirichlet condition. The right end is zero-flux by
default, which matches the inverse ``int_0^{x ^ y} s(dz)`` of the operator
on the half-line; a Dirichlet right end is available as an option.
All quantities are handled through logarithms so that large ``a L`` does
not overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import SymmetricTridiagonal, check_beta_a
from .exceptions import ParameterError
from .rng import EnvironmentPath, RandomStream, bridge_refine
from .sturm import smallest_eigenvalues

BOUNDARIES = ("natural", "dirichlet")
_LOG2 = math.log(2.0)


def noise_scale(beta: float) -> float:
    """Noise coefficient ``2 / sqrt(beta)``; zero for ``beta = inf``."""
    return 0.0 if math.isinf(beta) else 2.0 / math.sqrt(beta)


def default_domain_length(lam_max: float = 1.0) -> float:
    """Truncation length ``max(12, log(lam_max) + 5)``."""
    return max(12.0, math.log(max(lam_max, 1.0)) + 5.0)


def uniform_grid(L: float, h: float) -> np.ndarray:
    """Nodes ``0, h, ..., L`` with the last cell adjusted to end at ``L``."""
    if not (L > 0 and h > 0):
        raise ParameterError("L and h must be positive")
    N = max(1, int(math.ceil(L / h - 1e-9)))
    return np.linspace(0.0, L, N + 1)


@dataclass(frozen=True)
class SpeedScaleGrid:
    """Cell integrals of the speed and scale densities.

    Attributes
    ----------
    x : ndarray, shape (N+1,)
        Nodes ``0 = x_0 < ... < x_N = L``.
    log_cell_mass, log_cell_scale : ndarray, shape (N,)
        Logarithms of ``int_cell m'`` and ``int_cell s'``.
    boundary : {"natural", "dirichlet"}
        Condition at ``x = L``.
    """

    x: np.ndarray
    log_cell_mass: np.ndarray
    log_cell_scale: np.ndarray
    boundary: str = "natural"

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ParameterError(f"boundary must be one of {BOUNDARIES}")
        n = len(self.x) - 1
        if n < 1 or len(self.log_cell_mass) != n or len(self.log_cell_scale) != n:
            raise ParameterError("need N+1 nodes and N cells")
        if not (np.all(np.isfinite(self.log_cell_mass)) and np.all(np.isfinite(self.log_cell_scale))):
            raise ParameterError("cell masses and scales must be positive and finite")

    @classmethod
    def from_cells(cls, x, cell_mass, cell_scale, boundary="natural") -> "SpeedScaleGrid":
        """Build from plain (positive) cell masses and cell scale integrals."""
        return cls(np.asarray(x, float), np.log(np.asarray(cell_mass, float)),
                   np.log(np.asarray(cell_scale, float)), boundary)

    @property
    def L(self) -> float:
        return float(self.x[-1])

    @property
    def h(self) -> float:
        return float(np.max(np.diff(self.x)))

    @property
    def num_cells(self) -> int:
        return len(self.x) - 1

    @property
    def cell_mass(self) -> np.ndarray:
        return np.exp(self.log_cell_mass)

    @property
    def conductance(self) -> np.ndarray:
        """``1 / int_cell s'`` for every cell."""
        return np.exp(-self.log_cell_scale)

    @property
    def log_node_mass(self) -> np.ndarray:
        """Lumped node masses: half of each adjacent cell."""
        lm = self.log_cell_mass
        out = np.empty(len(self.x))
        out[0] = lm[0] - _LOG2
        out[-1] = lm[-1] - _LOG2
        out[1:-1] = np.logaddexp(lm[:-1], lm[1:]) - _LOG2
        return out

    @property
    def node_mass(self) -> np.ndarray:
        return np.exp(self.log_node_mass)

    @property
    def log_scale_function(self) -> np.ndarray:
        """``log S(x_i)`` with ``S(x) = int_0^x s'``; ``-inf`` at the origin."""
        return np.concatenate(([-np.inf], np.logaddexp.accumulate(self.log_cell_scale)))


@dataclass(frozen=True)
class GeneratorDiscretization:
    """Symmetrized generator matrix together with its speed/scale grid.

    ``matrix`` is ``D^{1/2} G D^{-1/2}`` with ``D = diag(node masses)``
    restricted to the unknown nodes (``x_1..x_N`` for a zero-flux right end,
    ``x_1..x_{N-1}`` for a Dirichlet right end).
    """

    matrix: SymmetricTridiagonal
    speed_scale: SpeedScaleGrid

    @property
    def unknowns(self) -> np.ndarray:
        n = self.matrix.n
        return np.arange(1, n + 1)

    def row_form(self) -> np.ndarray:
        """Dense non-symmetric matrix of ``G`` acting on nodal values."""
        idx = self.unknowns
        lm = self.speed_scale.log_node_mass[idx]
        D = np.exp(0.5 * lm)
        return self.matrix.to_dense() * (1.0 / D)[:, None] * D[None, :]


def build_speed_scale(a: float, beta: float, L: float, h: float, path: EnvironmentPath,
                      boundary: str = "natural") -> SpeedScaleGrid:
    """Trapezoid cell integrals of the speed and scale densities.

    Parameters
    ----------
    a : float
        Greater than -1.
    beta : float
        Positive or ``inf`` (no noise).
    L : float
        Domain length; must be a node of ``path``.
    h : float
        Largest admissible cell width.
    path : EnvironmentPath
        Brownian environment covering ``[0, L]``.
    boundary : {"natural", "dirichlet"}

    Returns
    -------
    SpeedScaleGrid
    """
    check_beta_a(beta, a, allow_inf=True)
    if path.length < L * (1 - 1e-12):
        raise ParameterError(f"path covers [0, {path.length}] but L = {L}")
    p = path.restrict(L)
    x = p.grid
    dx = np.diff(x)
    if dx.size == 0 or np.max(dx) > h * (1 + 1e-9):
        raise ParameterError("path spacing exceeds h on [0, L]")
    sig = noise_scale(beta)
    noise = sig * p.values if sig else np.zeros_like(x)
    lm = -(a + 1.0) * x - noise
    ls = a * x + noise
    half = np.log(0.5 * dx)
    return SpeedScaleGrid(x, half + np.logaddexp(lm[:-1], lm[1:]),
                          half + np.logaddexp(ls[:-1], ls[1:]), boundary)


def build_generator(ss: SpeedScaleGrid) -> GeneratorDiscretization:
    """Symmetric tridiagonal form of the discretized generator.

    Row ``i`` of the generator is
    ``-[c_i (f_{i+1} - f_i) - c_{i-1} (f_i - f_{i-1})] / m_i`` with cell
    conductances ``c`` and node masses ``m``. After the similarity by
    ``diag(sqrt(m_i))`` the diagonal is ``(c_{i-1} + c_i) / m_i`` and the
    off-diagonal ``-c_i / sqrt(m_i m_{i+1})``. A zero-flux right end drops
    ``c_N``; a Dirichlet right end removes node ``N``.
    """
    N = ss.num_cells
    logc = -ss.log_cell_scale               # cells 0..N-1
    logm = ss.log_node_mass                 # nodes 0..N
    last = N if ss.boundary == "natural" else N - 1
    if last < 1:
        raise ParameterError("grid has no interior nodes")
    i = np.arange(1, last + 1)
    diag = np.exp(logc[i - 1] - logm[i])
    inner = i[i < N]
    diag[: inner.size] += np.exp(logc[inner] - logm[inner])
    j = i[:-1]
    off = -np.exp(logc[j] - 0.5 * (logm[j] + logm[j + 1]))
    return GeneratorDiscretization(SymmetricTridiagonal(diag, off), ss)


def environment(L: float, h: float, beta: float, stream: RandomStream | None) -> EnvironmentPath:
    """Environment on the uniform grid: Brownian, or zero for ``beta = inf``."""
    grid = uniform_grid(L, h)
    if math.isinf(beta) or stream is None:
        if not math.isinf(beta):
            raise ParameterError("a random stream or a path is required for finite beta")
        return EnvironmentPath.zero(grid)
    return EnvironmentPath.sample(grid, stream)


def sbo_eigenvalues(a: float, beta: float, L: float, h: float, k: int,
                    stream: RandomStream | None = None, *, path: EnvironmentPath | None = None,
                    boundary: str = "natural", rtol: float = 1e-13) -> np.ndarray:
    """Lowest ``k`` eigenvalues of the discretized operator.

    Either a ``stream`` (a fresh environment is sampled on the uniform grid
    of width ``h``) or a fixed ``path`` must be given; for ``beta = inf``
    neither is needed.

    Returns
    -------
    ndarray of shape (k,)
    """
    if path is None:
        path = environment(L, h, beta, stream)
    gen = build_generator(build_speed_scale(a, beta, L, h, path, boundary))
    if k > gen.matrix.n:
        raise ParameterError("k exceeds the number of grid unknowns")
    return smallest_eigenvalues(gen.matrix, k, tol=1e-300, rtol=rtol)


def _scale_at(ss: SpeedScaleGrid, x) -> np.ndarray:
    """``S(x) = int_0^x s'`` with the density constant inside each cell."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > ss.L * (1 + 1e-12)):
        raise ParameterError("points must lie in [0, L]")
    S = np.exp(ss.log_scale_function)
    j = np.clip(np.searchsorted(ss.x, x, side="right") - 1, 0, ss.num_cells - 1)
    frac = (x - ss.x[j]) / (ss.x[j + 1] - ss.x[j])
    return S[j] + frac * np.exp(ss.log_cell_scale[j])


def greens_value(x: float, y: float, ss: SpeedScaleGrid, *, truncated: bool = False) -> float:
    """Green's function of the operator.

    Untruncated: ``S(x ^ y)`` with ``S(x) = int_0^x s(dz)``. Truncated (both
    ends Dirichlet): ``S(x ^ y) (S(L) - S(x v y)) / S(L)``.
    """
    lo, hi = _scale_at(ss, [min(x, y), max(x, y)])
    if not truncated:
        return float(lo)
    SL = float(np.exp(ss.log_scale_function[-1]))
    return float(lo * (SL - hi) / SL)


def trace_inverse(ss: SpeedScaleGrid, *, truncated: bool | None = None) -> float:
    """Quadrature of ``int S(x) m(dx)`` (or its truncated analogue).

    With the node quadrature used here the value equals the trace of the
    inverse of the discrete generator with the matching right boundary:
    untruncated for a zero-flux end, truncated for a Dirichlet end. By
    default the variant matching ``ss.boundary`` is returned.
    """
    if truncated is None:
        truncated = ss.boundary == "dirichlet"
    lS = ss.log_scale_function
    lm = ss.log_node_mass
    if not truncated:
        return float(np.sum(np.exp(lS[1:] + lm[1:])))
    # S_i (S_L - S_i) / S_L, computed as S_i * (1 - exp(lS_i - lS_L))
    inner = slice(1, len(lS) - 1)
    w = -np.expm1(lS[inner] - lS[-1])
    return float(np.sum(np.exp(lS[inner] + lm[inner]) * w))


def certify_domain_length(a: float, beta: float, h: float, stream: RandomStream | None = None, *,
                          path: EnvironmentPath | None = None, L0: float = 4.0, tol: float = 1e-3,
                          L_max: float = 64.0, boundary: str = "natural"):
    """Smallest doubling ``L* = L0 2^j`` with ``|Lambda_0(2L*) - Lambda_0(L*)| <= tol``.

    The environment is fixed (sampled once up to ``L_max``), so the sequence
    ``Lambda_0(L)`` is nonincreasing in ``L``.

    Returns
    -------
    L_star : float
    history : list of (L, Lambda_0)
    """
    if path is None:
        path = environment(L_max, h, beta, stream)
    history = []
    L = L0
    while L <= L_max:
        history.append((L, float(sbo_eigenvalues(a, beta, L, h, 1, path=path, boundary=boundary)[0])))
        if len(history) >= 2 and abs(history[-1][1] - history[-2][1]) <= tol:
            return history[-2][0], history
        L *= 2
    raise ParameterError(f"Lambda_0(L) did not settle to {tol} below L = {L_max}")


def grid_refinement(a: float, beta: float, L: float, h: float, levels: int, stream: RandomStream,
                    refine_stream: RandomStream | None = None, boundary: str = "natural"):
    """Lambda_0 on one environment under successive midpoint bridge refinement.

    Returns
    -------
    hs : ndarray
        Cell widths ``h, h/2, ...``.
    values : ndarray
        Lambda_0 at each width.
    """
    path = environment(L, h, beta, stream)
    refine_stream = refine_stream or stream
    hs, values = [], []
    for lev in range(levels):
        hh = h / 2 ** lev
        if lev:
            path = bridge_refine(path, 0.5 * (path.grid[1:] + path.grid[:-1]), refine_stream)
        hs.append(hh)
        values.append(float(sbo_eigenvalues(a, beta, L, hh, 1, path=path, boundary=boundary)[0]))
    return np.array(hs), np.array(values)


def _minima_task(start, stop, beta, a, L, h, k, seed, boundary):
    out = np.empty((stop - start, k))
    for i in range(start, stop):
        s = None if math.isinf(beta) else RandomStream(seed, i)
        out[i - start] = sbo_eigenvalues(a, beta, L, h, k, s, boundary=boundary)
    return out


def sample_sbo_eigenvalues(beta: float, a: float, L: float, h: float, k: int, num_samples: int,
                           seed: int, *, boundary: str = "natural",
                           workers: int | None = None) -> np.ndarray:
    """Rows ``(Lambda_0, ..., Lambda_{k-1})`` over independent environments.

    Sample ``i`` uses ``RandomStream(seed, i)``.
    """
    from .parallel import map_tasks

    check_beta_a(beta, a, allow_inf=True)
    if num_samples < 1:
        raise ParameterError("num_samples must be positive")
    return map_tasks(_minima_task, num_samples, (beta, a, L, h, k, seed, boundary), workers=workers)
