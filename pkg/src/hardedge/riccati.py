"""Oscillation and Riccati diffusions for counting hard-edge eigenvalues.

For a spectral parameter ``lam`` the solution of

    dpsi' = sigma psi' db + ((a + 2/beta) psi' - lam e^{-x} psi) dx,
    dpsi  = psi' dx,            (psi, psi')(0) = (0, 1),

has as many zeros on ``(0, L]`` as the operator has eigenvalues below
``lam`` (with a Dirichlet right end; with a zero-flux right end one more
zero is counted when ``psi psi' < 0`` at ``L``). The ratio ``p = psi'/psi``
solves the Riccati equation

    dp = sigma p db + ((a + 2/beta) p - p^2 - lam e^{-x}) dx

and each zero of ``psi`` is a passage of ``p`` to ``-inf`` followed by a
restart from ``+inf``. The soft-edge analogue is

    dq = sigma db + (x + mu - q^2) dx,

whose probability of never reaching ``-inf`` is the Tracy-Widom CDF at ``mu``.

Two integrators are provided. The linear system is advanced by
Euler-Maruyama with renormalization. The Riccati equations are advanced by
Strang splitting into an exactly solvable deterministic part (a Riccati ODE
with frozen forcing, solved as a Moebius map, which passes through infinity
without thresholds) and an exactly solvable noise part.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .exceptions import ParameterError, StepSizeError
from .parallel import map_tasks
from .rng import EnvironmentPath, RandomStream, brownian_increments
from .sbo import BOUNDARIES, default_domain_length, noise_scale, uniform_grid
from .stats import binomial_se

RENORM = 1e100
_MAX_CROSSINGS = 4096


# --------------------------------------------------------------------------
# numba kernels

@numba.njit(cache=True)
def _flow(p, kappa, s):
    # exact flow of p' = -(p^2 + kappa) over time s (requires sqrt(kappa) s < pi/2);
    # returns the new value, whether p passed through -inf, and the passage time
    if kappa > 0.0:
        r = math.sqrt(kappa)
        g = math.tan(r * s) / r
    elif kappa < 0.0:
        r = math.sqrt(-kappa)
        g = math.tanh(r * s) / r
    else:
        r = 0.0
        g = s
    if p == math.inf:
        return 1.0 / g, 0, 0.0
    D = 1.0 + p * g
    if D > 0.0:
        return (p - kappa * g) / D, 0, 0.0
    # blow-up time solves g(t) = -1/p
    if kappa > 0.0:
        t = math.atan(-r / p) / r
    elif kappa < 0.0:
        t = math.atanh(min(-r / p, 1.0)) / r
    else:
        t = -1.0 / p
    if D == 0.0:
        return math.inf, 1, t
    return (p - kappa * g) / D, 1, t


@numba.njit(cache=True)
def _det_step(p, kappa, s, x0, cross, nc):
    # substeps keep the rotation angle sqrt(kappa) s below one radian
    m = 1
    if kappa > 0.0:
        m = max(1, int(math.ceil(math.sqrt(kappa) * s)))
    hs = s / m
    for j in range(m):
        p, e, t = _flow(p, kappa, hs)
        if e:
            if nc < cross.shape[0]:
                cross[nc] = x0 + j * hs + t
            nc += 1
    return p, nc


@numba.njit(cache=True)
def _riccati_hard(grid, db, a, sig, lam, p0, natural, cross):
    # completing the square, p' = a p - p^2 - kappa becomes
    # (p - a/2)' = -((p - a/2)^2 + kappa - a^2/4); the noise step is the
    # exact solution p -> p exp(sig db) of dp = sig p db + (2/beta) p dx
    p = p0
    nc = 0
    sh = 0.25 * a * a
    ha = 0.5 * a
    for i in range(grid.shape[0] - 1):
        x0 = grid[i]
        h = grid[i + 1] - x0
        pt, nc = _det_step(p - ha, lam * math.exp(-(x0 + 0.25 * h)) - sh, 0.5 * h, x0, cross, nc)
        p = (pt + ha) * math.exp(sig * db[i])
        pt, nc = _det_step(p - ha, lam * math.exp(-(x0 + 0.75 * h)) - sh, 0.5 * h,
                           x0 + 0.5 * h, cross, nc)
        p = pt + ha
    if natural and p < 0.0:
        if nc < cross.shape[0]:
            cross[nc] = grid[grid.shape[0] - 1]
        nc += 1
    return nc, p


@numba.njit(cache=True)
def _riccati_soft(grid, db, mu, sig, q0, stop_at_first, cross):
    q = q0
    nc = 0
    for i in range(grid.shape[0] - 1):
        x0 = grid[i]
        h = grid[i + 1] - x0
        q, nc = _det_step(q, -(x0 + 0.25 * h + mu), 0.5 * h, x0, cross, nc)
        q = q + sig * db[i]
        q, nc = _det_step(q, -(x0 + 0.75 * h + mu), 0.5 * h, x0 + 0.5 * h, cross, nc)
        if stop_at_first and nc > 0:
            break
    return nc, q


@numba.njit(cache=True)
def _psi_em(grid, db, drift, sig, lam, natural, cross):
    psi = 0.0
    dpsi = 1.0
    sgn = 0.0
    nc = 0
    for i in range(grid.shape[0] - 1):
        x0 = grid[i]
        h = grid[i + 1] - x0
        new = psi + dpsi * h
        dpsi = dpsi * (1.0 + sig * db[i] + drift * h) - lam * math.exp(-x0) * h * psi
        if new != 0.0:
            s = 1.0 if new > 0.0 else -1.0
            if sgn != 0.0 and s != sgn:
                if nc < cross.shape[0]:
                    if psi != 0.0 and (psi > 0.0) != (new > 0.0):
                        cross[nc] = x0 + h * psi / (psi - new)
                    else:
                        cross[nc] = x0
                nc += 1
            sgn = s
        psi = new
        big = max(abs(psi), abs(dpsi))
        if big > 1e100 or (big < 1e-100 and big > 0.0):
            psi /= big
            dpsi /= big
    if natural and psi * dpsi < 0.0:
        if nc < cross.shape[0]:
            cross[nc] = grid[grid.shape[0] - 1]
        nc += 1
    return nc, psi, dpsi


# --------------------------------------------------------------------------
# parameter containers

@dataclass(frozen=True)
class HardEdgeParams:
    """Parameters of the hard-edge counting problem.

    Attributes
    ----------
    beta : float
        Positive, or ``inf`` for the noiseless problem.
    a : float
        Greater than -1.
    lam : float
        Spectral parameter, nonnegative.
    L : float, optional
        Truncation length; defaults to ``max(12, log(lam) + 5)``.
    dx : float
        Step of the uniform integration grid.
    p_start : float
        Entrance height of the Riccati diffusion (``inf`` allowed).
    boundary : {"natural", "dirichlet"}
        Condition at ``L``.
    """

    beta: float
    a: float
    lam: float
    L: float | None = None
    dx: float = 2.0 ** -9
    p_start: float = 1e4
    boundary: str = "natural"

    def __post_init__(self):
        if not self.beta > 0:
            raise ParameterError("beta must be positive")
        if not self.a > -1:
            raise ParameterError("a must exceed -1")
        if not self.lam >= 0:
            raise ParameterError("lam must be nonnegative")
        if self.L is None:
            object.__setattr__(self, "L", default_domain_length(self.lam))
        if not (self.L > 0 and self.dx > 0 and self.p_start > 0):
            raise ParameterError("L, dx and p_start must be positive")
        if self.boundary not in BOUNDARIES:
            raise ParameterError(f"boundary must be one of {BOUNDARIES}")

    @property
    def sigma(self) -> float:
        return noise_scale(self.beta)

    def grid(self) -> np.ndarray:
        return uniform_grid(self.L, self.dx)


@dataclass(frozen=True)
class SoftEdgeParams:
    """Parameters of the soft-edge diffusion ``dq = sigma db + (x + mu - q^2) dx``.

    ``x_max`` defaults to ``10 + max(0, -mu)``: beyond it ``q`` follows
    ``sqrt(x + mu)`` closely and further explosions are negligible.
    """

    beta: float
    mu: float
    x_max: float | None = None
    dx: float = 2.0 ** -7
    q_start: float = 1e4

    def __post_init__(self):
        if not self.beta > 0:
            raise ParameterError("beta must be positive")
        if self.x_max is None:
            object.__setattr__(self, "x_max", 10.0 + max(0.0, -self.mu))
        if not (self.x_max > 0 and self.dx > 0 and self.q_start > 0):
            raise ParameterError("x_max, dx and q_start must be positive")

    @property
    def sigma(self) -> float:
        return noise_scale(self.beta)

    def grid(self) -> np.ndarray:
        return uniform_grid(self.x_max, self.dx)


@dataclass(frozen=True)
class TransitionParams:
    """Hard-to-soft scaling ``a = 2 sqrt(eta) - 2/beta``, ``lam = eta - eta^(2/3) mu``."""

    eta: float
    mu: float
    beta: float = 2.0

    def __post_init__(self):
        if not (self.eta > 0 and self.beta > 0):
            raise ParameterError("eta and beta must be positive")
        if not self.a > -1:
            raise ParameterError(f"eta = {self.eta} gives a = {self.a} <= -1")
        if self.lam < 0:
            raise ParameterError(f"eta = {self.eta}, mu = {self.mu} give a negative lambda")

    @property
    def a(self) -> float:
        return 2.0 * math.sqrt(self.eta) - 2.0 / self.beta

    @property
    def lam(self) -> float:
        return self.eta - self.eta ** (2.0 / 3.0) * self.mu


@dataclass(frozen=True)
class DiffusionRun:
    """Outcome of one trajectory."""

    count: int
    crossings: np.ndarray = field(repr=False)
    final_state: tuple = ()

    @property
    def survived(self) -> bool:
        return self.count == 0


# --------------------------------------------------------------------------
# single trajectories

def _noise(grid, stream, path, sigma=1.0):
    if path is None and stream is None and sigma == 0.0:
        return np.zeros(grid.size - 1)
    if path is not None:
        if path.grid.size != grid.size or not np.allclose(path.grid, grid, rtol=0, atol=1e-12):
            raise ParameterError("path grid does not match the integration grid")
        return path.increments()
    if stream is None:
        raise ParameterError("a random stream or a path is required")
    return brownian_increments(grid, stream)


def _grid_for(params, path):
    if path is None:
        return params.grid()
    L = params.L if isinstance(params, HardEdgeParams) else params.x_max
    p = path.restrict(L)
    if np.max(np.diff(p.grid)) > params.dx * (1 + 1e-9):
        raise ParameterError("path spacing exceeds dx")
    return p.grid


def _run(nc, cross, state):
    return DiffusionRun(int(nc), cross[: min(nc, cross.size)].copy(), state)


def count_zeros_psi(params: HardEdgeParams, stream: RandomStream | None = None, *,
                    path: EnvironmentPath | None = None) -> DiffusionRun:
    """Zeros of ``psi`` on ``(0, L]`` by Euler-Maruyama on the linear system.

    ``(psi, psi')`` is rescaled by its max-norm whenever it leaves
    ``[1e-100, 1e100]``; zeros are unaffected by positive rescaling.

    Raises
    ------
    StepSizeError
        If ``sqrt(lam) dx > 0.5``, i.e. the step cannot resolve the fastest
        oscillation of ``psi``.
    """
    grid = _grid_for(params, path)
    if math.sqrt(params.lam) * float(np.max(np.diff(grid))) > 0.5:
        raise StepSizeError(f"dx = {params.dx} is too coarse for lam = {params.lam}")
    if path is not None:
        path = path.restrict(params.L)
    sig = params.sigma
    db = _noise(grid, stream, path, sig)
    drift = params.a + (0.0 if math.isinf(params.beta) else 2.0 / params.beta)
    cross = np.empty(_MAX_CROSSINGS)
    nc, psi, dpsi = _psi_em(grid, db, drift, sig, float(params.lam), params.boundary == "natural", cross)
    return _run(nc, cross, (psi, dpsi))


def count_explosions_p(params: HardEdgeParams, stream: RandomStream | None = None, *,
                       path: EnvironmentPath | None = None) -> DiffusionRun:
    """Passages of the Riccati diffusion to ``-inf`` on ``(0, L]``.

    Each step is split as half a deterministic Riccati flow, the exact
    multiplicative noise step, and another half flow. Passages through
    ``-inf`` are detected exactly from the Moebius form of the flow and the
    diffusion restarts from ``+inf`` on its own, so no explosion threshold is
    needed. Crossing locations are exact for the frozen forcing.
    """
    grid = _grid_for(params, path)
    if path is not None:
        path = path.restrict(params.L)
    db = _noise(grid, stream, path, params.sigma)
    cross = np.empty(_MAX_CROSSINGS)
    nc, p = _riccati_hard(grid, db, float(params.a), params.sigma, float(params.lam),
                          float(params.p_start), params.boundary == "natural", cross)
    return _run(nc, cross, (p,))


def integrate_q(params: SoftEdgeParams, stream: RandomStream | None = None, *,
                path: EnvironmentPath | None = None, stop_at_first: bool = True) -> DiffusionRun:
    """Integrate the soft-edge diffusion up to ``x_max``."""
    grid = _grid_for(params, path)
    if path is not None:
        path = path.restrict(params.x_max)
    db = _noise(grid, stream, path)
    cross = np.empty(_MAX_CROSSINGS)
    nc, q = _riccati_soft(grid, db, float(params.mu), params.sigma, float(params.q_start),
                          stop_at_first, cross)
    return _run(nc, cross, (q,))


def survival_q(params: SoftEdgeParams, stream: RandomStream | None = None, *,
               path: EnvironmentPath | None = None) -> bool:
    """Whether the soft-edge diffusion avoids ``-inf`` up to ``x_max``."""
    return integrate_q(params, stream, path=path).survived


# --------------------------------------------------------------------------
# Monte Carlo drivers

_ROUTES = ("riccati", "psi")


def _count_task(start, stop, beta, a, lams, L, dx, seed, route, p_start, boundary):
    out = np.empty((stop - start, len(lams)), dtype=np.int64)
    grid = uniform_grid(L, dx)
    sig = noise_scale(beta)
    drift = a + (0.0 if math.isinf(beta) else 2.0 / beta)
    natural = boundary == "natural"
    cross = np.empty(_MAX_CROSSINGS)
    for i in range(start, stop):
        db = brownian_increments(grid, RandomStream(seed, i)) if sig else np.zeros(grid.size - 1)
        for j, lam in enumerate(lams):
            if route == "riccati":
                nc, _ = _riccati_hard(grid, db, a, sig, lam, p_start, natural, cross)
            else:
                nc, _, _ = _psi_em(grid, db, drift, sig, lam, natural, cross)
            out[i - start, j] = nc
    return out


def count_batch(beta: float, a: float, lams, num_paths: int, seed: int, *, L: float | None = None,
                dx: float = 2.0 ** -9, route: str = "riccati", p_start: float = 1e4,
                boundary: str = "natural", workers: int | None = None) -> np.ndarray:
    """Eigenvalue counts below each ``lam`` for ``num_paths`` environments.

    All values of ``lam`` share the driving noise of a path, so the counts
    are nondecreasing in ``lam`` along each row. Path ``i`` uses
    ``RandomStream(seed, i)``.

    Returns
    -------
    ndarray of int, shape (num_paths, len(lams))
    """
    lams = [float(v) for v in np.atleast_1d(lams)]
    if route not in _ROUTES:
        raise ParameterError(f"route must be one of {_ROUTES}")
    if num_paths < 1:
        raise ParameterError("num_paths must be positive")
    for lam in lams:
        HardEdgeParams(beta, a, lam, L, dx, p_start, boundary)
    if L is None:
        L = default_domain_length(max(lams))
    if route == "psi" and math.sqrt(max(lams)) * dx > 0.5:
        raise StepSizeError(f"dx = {dx} is too coarse for lam = {max(lams)}")
    return map_tasks(_count_task, num_paths, (beta, a, lams, L, dx, seed, route, p_start, boundary),
                     workers=workers)


def cdf_Lambda_k(beta: float, a: float, lam: float, k: int, num_paths: int, seed: int, *,
                 L: float | None = None, dx: float = 2.0 ** -9, route: str = "riccati",
                 workers: int | None = None) -> tuple[float, float]:
    """Estimate ``P(Lambda_k < lam)`` with its binomial standard error.

    ``Lambda_k < lam`` exactly when at least ``k + 1`` eigenvalues lie below
    ``lam``, i.e. when the diffusion explodes at least ``k + 1`` times.
    """
    if k < 0:
        raise ParameterError("k must be nonnegative")
    counts = count_batch(beta, a, [lam], num_paths, seed, L=L, dx=dx, route=route, workers=workers)[:, 0]
    p = float(np.mean(counts >= k + 1))
    return p, binomial_se(p, num_paths)


def _survival_task(start, stop, beta, mus, x_max, dx, q_start, seed):
    out = np.empty((stop - start, len(mus)), dtype=bool)
    grid = uniform_grid(x_max, dx)
    sig = noise_scale(beta)
    cross = np.empty(_MAX_CROSSINGS)
    for i in range(start, stop):
        db = brownian_increments(grid, RandomStream(seed, i))
        for j, mu in enumerate(mus):
            nc, _ = _riccati_soft(grid, db, mu, sig, q_start, True, cross)
            out[i - start, j] = nc == 0
    return out


def survival_batch(beta: float, mus, num_paths: int, seed: int, *, x_max: float | None = None,
                   dx: float = 2.0 ** -7, q_start: float = 1e4,
                   workers: int | None = None) -> np.ndarray:
    """Soft-edge survival flags, shape ``(num_paths, len(mus))``, on shared noise."""
    mus = [float(v) for v in np.atleast_1d(mus)]
    if x_max is None:
        x_max = 10.0 + max(0.0, -min(mus))
    SoftEdgeParams(beta, mus[0], x_max, dx, q_start)
    if num_paths < 1:
        raise ParameterError("num_paths must be positive")
    return map_tasks(_survival_task, num_paths, (beta, mus, x_max, dx, q_start, seed), workers=workers)


@dataclass(frozen=True)
class TransitionResult:
    """Hard-edge and soft-edge survival estimates on coupled noise."""

    eta: float
    mu: float
    beta: float
    num_paths: int
    p_hard: float
    p_soft: float
    se_diff: float

    @property
    def abs_diff(self) -> float:
        return abs(self.p_hard - self.p_soft)

    @property
    def se_hard(self) -> float:
        return binomial_se(self.p_hard, self.num_paths)

    @property
    def se_soft(self) -> float:
        return binomial_se(self.p_soft, self.num_paths)


def transition_grids(tp: TransitionParams, dq: float, x_q: float, tail_dx: float = 0.01):
    """Soft grid ``[0, x_q]`` and the hard grid ``eta^{-1/3}`` times it, extended to ``L``.

    Returns
    -------
    qgrid, hgrid, L : ndarray, ndarray, float
    """
    qgrid = uniform_grid(x_q, dq)
    s = tp.eta ** (-1.0 / 3.0)
    L = max(default_domain_length(tp.lam), s * x_q)
    head = qgrid * s
    step = max(tail_dx, s * dq)
    tail = np.arange(head[-1] + step, L, step)
    hgrid = np.concatenate((head, tail, [L])) if head[-1] < L else head
    if hgrid.size > 1 and hgrid[-1] - hgrid[-2] < 1e-12:
        hgrid = np.delete(hgrid, -2)
    return qgrid, hgrid, float(hgrid[-1])


def _transition_task(start, stop, eta, mu, beta, dq, x_q, p_start, q_start, seed):
    tp = TransitionParams(eta, mu, beta)
    qgrid, hgrid, _ = transition_grids(tp, dq, x_q)
    nq = qgrid.size - 1
    sq = math.sqrt(dq)
    sh = np.sqrt(np.diff(hgrid))
    sig = noise_scale(beta)
    cross = np.empty(_MAX_CROSSINGS)
    out = np.empty((stop - start, 2), dtype=bool)
    for i in range(start, stop):
        z = RandomStream(seed, i).normal(hgrid.size - 1)
        nh, _ = _riccati_hard(hgrid, z * sh, tp.a, sig, tp.lam, p_start, True, cross)
        ns, _ = _riccati_soft(qgrid, z[:nq] * sq, mu, sig, q_start, True, cross)
        out[i - start] = (nh == 0, ns == 0)
    return out


def hard_to_soft(eta: float, mu: float, beta: float, num_paths: int, seed: int, *,
                 dq: float = 2.0 ** -7, x_q: float | None = None, p_start: float = math.inf,
                 q_start: float = math.inf, workers: int | None = None) -> TransitionResult:
    """Compare hard-edge survival at the transition scaling with soft-edge survival.

    The hard-edge Riccati diffusion with ``a = 2 sqrt(eta) - 2/beta`` and
    ``lam = eta - eta^(2/3) mu`` survives on ``(0, L]`` exactly when
    ``Lambda_0 > lam``. Its rescaled version ``eta^{1/6} (p(eta^{-1/3} x) /
    sqrt(eta) - 1)`` approaches the soft-edge diffusion at ``mu``, whose
    survival probability is the Tracy-Widom CDF at ``mu``. Both diffusions
    are driven by the same standard normals: the hard grid is
    ``eta^{-1/3}`` times the soft grid, so ``b_hard(eta^{-1/3} x) =
    eta^{-1/6} b_soft(x)``.

    Parameters
    ----------
    eta : float
        Transition parameter; must make ``a > -1``.
    mu : float
        Soft-edge spectral parameter.
    beta : float
    num_paths : int
    seed : int
    dq : float
        Step of the soft-edge grid.
    x_q : float, optional
        Soft-edge horizon, default ``10 + max(0, -mu)``.

    Returns
    -------
    TransitionResult
    """
    TransitionParams(eta, mu, beta)
    if num_paths < 1:
        raise ParameterError("num_paths must be positive")
    if x_q is None:
        x_q = 10.0 + max(0.0, -mu)
    flags = map_tasks(_transition_task, num_paths, (eta, mu, beta, dq, x_q, p_start, q_start, seed),
                      workers=workers)
    hard = flags[:, 0].astype(float)
    soft = flags[:, 1].astype(float)
    d = hard - soft
    se = float(np.std(d, ddof=1) / math.sqrt(num_paths)) if num_paths > 1 else float("nan")
    return TransitionResult(float(eta), float(mu), float(beta), int(num_paths),
                            float(hard.mean()), float(soft.mean()), se)
