"""Bidiagonal (beta, a)-Laguerre model and its discrete inverse kernel.

The model is the upper bidiagonal matrix ``L`` with independent entries

    L_kk = chi_{(a+n-k+1) beta} / sqrt(beta),   k = 1..n
    L_k,k+1 = chi_{(n-k) beta} / sqrt(beta),    k = 1..n-1

and the eigenvalues of ``L L^T`` follow the (beta, a)-Laguerre law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, ParameterError, SingularityError
from .rng import EnvironmentPath, RandomStream, sample_chi
from .stats import EmpiricalDistribution
from .sturm import smallest_eigenvalues, sturm_count  # noqa: F401  (re-export)


def check_beta_a(beta: float, a: float, *, allow_inf: bool = False) -> None:
    if not (beta > 0) or (math.isinf(beta) and not allow_inf):
        raise ParameterError(f"beta must be positive{' or inf' if allow_inf else ''}, got {beta}")
    if not a > -1:
        raise ParameterError(f"a must exceed -1, got {a}")


@dataclass(frozen=True)
class SymmetricTridiagonal:
    """Symmetric tridiagonal matrix given by its diagonal and off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        e = np.asarray(self.offdiag, dtype=float)
        if d.ndim != 1 or e.ndim != 1 or e.size != max(d.size - 1, 0) or d.size == 0:
            raise ParameterError("need n diagonal and n-1 off-diagonal entries")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def n(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass(frozen=True)
class LowerBidiagonal:
    """Lower bidiagonal matrix given by its diagonal and subdiagonal."""

    diag: np.ndarray
    subdiag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        s = np.asarray(self.subdiag, dtype=float)
        if s.size != max(d.size - 1, 0) or d.size == 0:
            raise ParameterError("need n diagonal and n-1 subdiagonal entries")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "subdiag", s)

    @property
    def n(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.subdiag, -1)


@dataclass(frozen=True)
class BidiagonalModel:
    """One draw of the upper bidiagonal model ``L``."""

    n: int
    beta: float
    a: float
    diag: np.ndarray
    superdiag: np.ndarray

    def __post_init__(self):
        check_beta_a(self.beta, self.a, allow_inf=True)
        d = np.asarray(self.diag, dtype=float)
        s = np.asarray(self.superdiag, dtype=float)
        if d.size != self.n or s.size != self.n - 1:
            raise ParameterError("need n diagonal and n-1 superdiagonal entries")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "superdiag", s)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.superdiag, 1)


def chi_indices(n: int, beta: float, a: float):
    """Chi indices of the diagonal and superdiagonal, top to bottom."""
    k = np.arange(1, n + 1, dtype=float)
    return (a + n - k + 1) * beta, (n - k[:-1]) * beta


def sample_model(n: int, beta: float, a: float, stream: RandomStream) -> BidiagonalModel:
    """Draw the bidiagonal model.

    Parameters
    ----------
    n : int
        Matrix size, at least 1.
    beta : float
        Positive inverse temperature.
    a : float
        Hard-edge parameter, greater than -1.
    stream : RandomStream

    Returns
    -------
    BidiagonalModel
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    check_beta_a(beta, a)
    rd, rs = chi_indices(n, beta, a)
    scale = 1.0 / math.sqrt(beta)
    diag = sample_chi(rd, stream, size=n) * scale
    sup = sample_chi(rs, stream, size=n - 1) * scale if n > 1 else np.empty(0)
    return BidiagonalModel(n, beta, a, diag, sup)


def gram_tridiagonal(L: BidiagonalModel) -> SymmetricTridiagonal:
    """``T = L L^T`` for the upper bidiagonal ``L``."""
    x, y = L.diag, L.superdiag
    diag = x * x
    diag[:-1] += y * y
    return SymmetricTridiagonal(diag, x[1:] * y)


def conjugate_antidiagonal(L: BidiagonalModel) -> LowerBidiagonal:
    """Lower bidiagonal ``M = S L S^{-1}`` with the anti-diagonal sign matrix ``S``.

    ``M`` has diagonal ``x_n, ..., x_1`` and subdiagonal ``-y_{n-1}, ..., -y_1``,
    and ``M M^T`` has the same spectrum as ``L L^T``.
    """
    return LowerBidiagonal(L.diag[::-1].copy(), -L.superdiag[::-1])


@dataclass(frozen=True)
class DiscreteKernel:
    """Integral kernel of ``(sqrt(n) M)^{-1}`` on the cells ``((i-1)/n, i/n]``.

    Cell value ``(i, j)`` with ``j <= i`` is ``prefactor[i] * exp(cumlog[i] -
    cumlog[j])`` and vanishes when a zero subdiagonal entry separates ``j``
    from ``i``. As an operator on ``L^2[0, 1]`` the cell quadrature weight is
    ``1/n``, so the cell matrix is ``n`` times the matrix inverse.
    """

    n: int
    prefactor: np.ndarray
    cumlog: np.ndarray
    breaks: np.ndarray

    def entry(self, i: int, j: int) -> float:
        """Cell value at 1-based indices ``(i, j)``."""
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise ParameterError("kernel index out of range")
        if j > i or self.breaks[i - 1] != self.breaks[j - 1]:
            return 0.0
        return float(self.prefactor[i - 1] * math.exp(self.cumlog[i - 1] - self.cumlog[j - 1]))

    def matrix(self) -> np.ndarray:
        """Dense ``n x n`` array of cell values."""
        logs = np.log(self.prefactor)[:, None] + self.cumlog[:, None] - self.cumlog[None, :]
        mask = np.tri(self.n, dtype=bool) & (self.breaks[:, None] == self.breaks[None, :])
        out = np.zeros((self.n, self.n))
        out[mask] = np.exp(logs[mask])
        return out

    def __call__(self, x: float, y: float) -> float:
        """Kernel value at ``(x, y)`` in ``(0, 1]^2``; cells are right-closed."""
        i = min(max(int(math.ceil(x * self.n)), 1), self.n)
        j = min(max(int(math.ceil(y * self.n)), 1), self.n)
        return self.entry(i, j)


def inverse_kernel(M: LowerBidiagonal) -> DiscreteKernel:
    """Discrete kernel of ``(sqrt(n) M)^{-1}`` accumulated in log space.

    Raises
    ------
    SingularityError
        If a diagonal entry of ``M`` is zero.
    """
    n = M.n
    d = np.abs(M.diag)
    if np.any(d == 0) or np.any(~np.isfinite(M.diag)):
        raise SingularityError("M has a zero diagonal entry")
    if np.any(M.diag < 0) or np.any(M.subdiag > 0):
        raise ParameterError("M must have a positive diagonal and a nonpositive subdiagonal")
    s = np.abs(M.subdiag)
    zero = s == 0
    ratio = np.zeros(n - 1)
    ratio[~zero] = np.log(s[~zero]) - np.log(d[:-1][~zero])
    cumlog = np.concatenate(([0.0], np.cumsum(ratio)))
    breaks = np.concatenate(([0], np.cumsum(zero)))
    return DiscreteKernel(n, math.sqrt(n) / d, cumlog, breaks)


def operator_norm_sq(K: DiscreteKernel, tol: float = 1e-13, max_iter: int = 200000) -> float:
    """Squared ``L^2[0,1]`` operator norm of the discrete kernel.

    Power iteration on ``A^T A`` with ``A = K.matrix() / n``. For
    ``K = inverse_kernel(M)`` the exact value is ``1 / (n lambda_min(M M^T))``.

    Raises
    ------
    ConvergenceError
        If the Rayleigh quotient has not settled to ``tol`` within ``max_iter``.
    """
    A = K.matrix() / K.n
    # rescale to avoid overflow for badly conditioned instances
    scale = np.max(np.abs(A))
    A = A / scale
    v = np.ones(K.n) / math.sqrt(K.n)
    est = 0.0
    for it in range(max_iter):
        w = A.T @ (A @ v)
        new = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
        if it > 2 and abs(new - est) <= tol * abs(new):
            return new * scale * scale
        est = new
    raise ConvergenceError(f"power iteration stalled after {max_iter} steps (last {est * scale * scale:.6g})")


def limit_kernel_value(x: float, y: float, a: float, beta: float, path: EnvironmentPath) -> float:
    """Limit kernel ``x^{-(1+a)/2} y^{a/2} exp((bhat(log 1/y) - bhat(log 1/x)) / sqrt(beta))``.

    ``bhat`` is a standard Brownian path in logarithmic time, so the
    stochastic integral of ``z^{-1/2} db_z`` from ``y`` to ``x`` equals
    ``bhat(log 1/y) - bhat(log 1/x)``. Returns 0 when ``y >= x``.
    """
    if y >= x:
        return 0.0
    if not (0 < y and x <= 1):
        raise ParameterError("need 0 < y < x <= 1")
    tx, ty = math.log(1.0 / x), math.log(1.0 / y)
    if ty > path.length * (1 + 1e-12):
        raise ParameterError("path does not cover [log(1/x), log(1/y)]")
    noise = 0.0
    if not math.isinf(beta):
        noise = (float(path(ty)) - float(path(tx))) / math.sqrt(beta)
    return math.exp(-(1 + a) / 2 * math.log(x) + a / 2 * math.log(y) + noise)


def _minima_one(n, beta, a, k, stream):
    L = sample_model(n, beta, a, stream)
    return n * smallest_eigenvalues(gram_tridiagonal(L), k, tol=1e-300, rtol=4e-16)


def scaled_minima_array(n: int, beta: float, a: float, k: int, num_samples: int, seed: int,
                        first_stream: int = 0) -> np.ndarray:
    """Rows ``(n lambda_0, ..., n lambda_{k-1})`` for independent draws.

    Draw ``i`` uses ``RandomStream(seed, first_stream + i)``.
    """
    if k < 1 or k > n:
        raise ParameterError("need 1 <= k <= n")
    if num_samples < 1:
        raise ParameterError("num_samples must be positive")
    check_beta_a(beta, a)
    out = np.empty((num_samples, k))
    for i in range(num_samples):
        out[i] = _minima_one(n, beta, a, k, RandomStream(seed, first_stream + i))
    return out


def sample_scaled_minima(n: int, beta: float, a: float, k: int, num_samples: int, seed: int,
                         *, workers: int | None = None) -> list[EmpiricalDistribution]:
    """Empirical laws of ``n lambda_j`` for ``j = 0..k-1``.

    Parameters
    ----------
    n, beta, a : model parameters
    k : int
        Number of smallest eigenvalues per draw.
    num_samples : int
    seed : int
        Master seed; draw ``i`` uses stream id ``i``.
    workers : int, optional
        Worker processes (defaults to ``HARDEDGE_WORKERS`` or 1).

    Returns
    -------
    list of EmpiricalDistribution
    """
    from .parallel import map_tasks

    rows = map_tasks(_minima_task, num_samples, (n, beta, a, k, seed), workers=workers)
    return [EmpiricalDistribution(rows[:, j]) for j in range(k)]


def _minima_task(start, stop, n, beta, a, k, seed):
    return scaled_minima_array(n, beta, a, k, stop - start, seed, first_stream=start)
