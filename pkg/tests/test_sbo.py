import math

import numpy as np
import pytest

from hardedge.bessel import bessel_zeros
from hardedge.exceptions import ParameterError
from hardedge.rng import EnvironmentPath, RandomStream
from hardedge.sbo import (SpeedScaleGrid, build_generator, build_speed_scale, certify_domain_length,
                          environment, greens_value, grid_refinement, sample_sbo_eigenvalues,
                          sbo_eigenvalues, trace_inverse, uniform_grid)
from hardedge.sturm import smallest_eigenvalues

INF = math.inf


def flat(L, h, a=0.0, boundary="natural"):
    return build_speed_scale(a, INF, L, h, EnvironmentPath.zero(uniform_grid(L, h)), boundary)


def test_flat_cell_integrals():
    h = 2.0 ** -4
    ss = flat(4.0, h)
    x = ss.x
    exact = np.exp(-x[:-1]) - np.exp(-x[1:])
    rel = ss.cell_mass / exact - 1
    # trapezoid error for e^{-x} over a cell is h^2/12 relative, to leading order
    assert np.max(np.abs(rel - h * h / 12)) < h ** 4
    assert np.allclose(ss.conductance, 1 / h, rtol=1e-14, atol=0)


def test_cell_mass_error_is_second_order():
    errs = []
    for h in (2.0 ** -3, 2.0 ** -4, 2.0 ** -5):
        ss = flat(2.0, h, a=0.5)
        exact = (np.exp(-1.5 * ss.x[:-1]) - np.exp(-1.5 * ss.x[1:])) / 1.5
        errs.append(np.max(np.abs(ss.cell_mass / exact - 1)))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.02)


def test_infinite_beta_ignores_path():
    grid = uniform_grid(3.0, 0.25)
    noisy = EnvironmentPath.sample(grid, RandomStream(1))
    a = build_speed_scale(0.3, INF, 3.0, 0.25, noisy)
    b = build_speed_scale(0.3, INF, 3.0, 0.25, EnvironmentPath.zero(grid))
    assert np.array_equal(a.log_cell_mass, b.log_cell_mass)


def test_toy_generator_spectrum():
    ss = SpeedScaleGrid.from_cells([0, 1, 2, 3], [1, 1, 1], [1, 1, 1], boundary="dirichlet")
    T = build_generator(ss).matrix
    assert np.allclose(smallest_eigenvalues(T, 2), [1, 3], atol=1e-13, rtol=0)


@pytest.mark.parametrize("boundary", ["natural", "dirichlet"])
def test_symmetric_and_row_forms_agree(boundary):
    g = np.random.default_rng(3)
    for _ in range(5):
        x = np.concatenate(([0], np.cumsum(g.uniform(0.5, 1.5, 6))))
        ss = SpeedScaleGrid.from_cells(x, g.uniform(0.1, 2, 6), g.uniform(0.1, 2, 6), boundary)
        gen = build_generator(ss)
        sym = np.linalg.eigvalsh(gen.matrix.to_dense())
        row = np.sort(np.linalg.eigvals(gen.row_form()).real)
        assert np.allclose(sym, row, rtol=1e-10, atol=0)
        assert sym[0] > 0


def test_row_form_is_the_difference_operator():
    x = np.array([0.0, 0.5, 1.5, 2.0])
    m = np.array([1.0, 2.0, 0.5])
    s = np.array([0.5, 1.0, 2.0])
    G = build_generator(SpeedScaleGrid.from_cells(x, m, s)).row_form()
    c = 1 / s
    node = np.array([m[0] + m[1], m[1] + m[2], m[2]]) / 2
    f = np.array([0.3, -1.0, 2.0])
    fe = np.concatenate(([0.0], f))
    flux = c * np.diff(fe)
    flux_out = np.append(flux[1:], 0.0)
    ref = -(flux_out - flux) / node
    assert np.allclose(G @ f, ref, rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("a", [0.0, 0.5, 2.0])
def test_noiseless_eigenvalues_are_quarter_squared_zeros(a):
    lam = sbo_eigenvalues(a, INF, 12.0, 2.0 ** -10, 3)
    j = np.array(bessel_zeros(a, 3))
    assert np.max(np.abs(lam - j ** 2 / 4)) <= 1e-2


def test_noiseless_examples():
    lam = sbo_eigenvalues(0.0, INF, 12.0, 2.0 ** -10, 2)
    assert np.allclose(lam, [1.44580, 7.61782], atol=1e-2, rtol=0)
    assert sbo_eigenvalues(2.0, INF, 12.0, 2.0 ** -10, 1)[0] == pytest.approx(6.59365, abs=1e-2)


def test_spectrum_positive_and_increasing():
    lam = sbo_eigenvalues(0.5, 2.0, 12.0, 2.0 ** -8, 5, RandomStream(7))
    assert lam[0] > 0 and np.all(np.diff(lam) > 0)


def test_dirichlet_end_raises_eigenvalues():
    path = environment(10.0, 2.0 ** -7, 1.0, RandomStream(8))
    nat = sbo_eigenvalues(0.0, 1.0, 10.0, 2.0 ** -7, 3, path=path)
    dir_ = sbo_eigenvalues(0.0, 1.0, 10.0, 2.0 ** -7, 3, path=path, boundary="dirichlet")
    assert np.all(dir_ >= nat)


def test_beta2_mean_near_one():
    lam = sample_sbo_eigenvalues(2.0, 0.0, 16.0, 2.0 ** -8, 1, 1000, seed=12)[:, 0]
    assert abs(lam.mean() - 1) < 4 / math.sqrt(1000)


def test_sampler_reproducible():
    A = sample_sbo_eigenvalues(1.0, 0.3, 8.0, 2.0 ** -6, 2, 20, seed=4)
    assert np.array_equal(A, sample_sbo_eigenvalues(1.0, 0.3, 8.0, 2.0 ** -6, 2, 20, seed=4))


def test_greens_flat():
    ss = flat(30.0, 2.0 ** -6)
    assert greens_value(0.0, 3.0, ss) == 0.0
    assert greens_value(2.0, 5.5, ss) == pytest.approx(2.0, rel=1e-12)
    assert greens_value(2.0, 5.5, ss, truncated=True) == pytest.approx(2.0 * 24.5 / 30, rel=1e-12)


def test_truncated_greens_below_untruncated():
    ss = build_speed_scale(0.2, 2.0, 6.0, 2.0 ** -5, environment(6.0, 2.0 ** -5, 2.0, RandomStream(2)))
    g = np.random.default_rng(1)
    for x, y in g.uniform(0, 6, size=(50, 2)):
        assert 0 <= greens_value(x, y, ss, truncated=True) <= greens_value(x, y, ss)


def test_flat_trace():
    ss = flat(30.0, 2.0 ** -8)
    # int_0^inf x e^{-x} dx = 1 and int x (L - x)/L e^{-x} dx = 1 - 2/L up to e^{-L}
    assert trace_inverse(ss) == pytest.approx(1.0, abs=1e-4)
    assert trace_inverse(ss, truncated=True) == pytest.approx(1 - 2 / 30, abs=1e-4)


@pytest.mark.parametrize("boundary", ["natural", "dirichlet"])
def test_trace_equals_inverse_trace(boundary):
    ss = build_speed_scale(0.5, 2.0, 4.0, 2.0 ** -4, environment(4.0, 2.0 ** -4, 2.0, RandomStream(5)), boundary)
    T = build_generator(ss).matrix.to_dense()
    assert trace_inverse(ss) == pytest.approx(np.trace(np.linalg.inv(T)), rel=1e-10)
    lam = smallest_eigenvalues(build_generator(ss).matrix, 4)
    assert trace_inverse(ss) >= np.sum(1 / lam)


def test_certify_domain_length():
    L, hist = certify_domain_length(0.0, 2.0, 2.0 ** -7, RandomStream(3))
    vals = [v for _, v in hist]
    assert L in [l for l, _ in hist]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1] - vals[-2]) <= 1e-3


def test_noiseless_grid_refinement_second_order():
    hs, vals = grid_refinement(0.0, INF, 12.0, 2.0 ** -4, 4, RandomStream(1))
    d = np.abs(np.diff(vals))
    assert np.array_equal(hs, 2.0 ** -np.arange(4, 8))
    assert d[0] / d[1] == pytest.approx(4, rel=0.1)
    assert d[1] / d[2] == pytest.approx(4, rel=0.1)


def test_refinement_keeps_path_and_finite():
    hs, vals = grid_refinement(0.0, 2.0, 8.0, 2.0 ** -5, 3, RandomStream(9), RandomStream(10))
    assert np.all(np.isfinite(vals)) and np.all(vals > 0)


def test_argument_errors():
    grid = uniform_grid(4.0, 0.25)
    path = EnvironmentPath.zero(grid)
    with pytest.raises(ParameterError):
        build_speed_scale(0.0, 2.0, 8.0, 0.25, path)
    with pytest.raises(ParameterError):
        build_speed_scale(0.0, 2.0, 4.0, 0.1, path)
    with pytest.raises(ParameterError):
        build_speed_scale(0.0, 2.0, 4.0, 0.25, path, boundary="robin")
    with pytest.raises(ParameterError):
        build_speed_scale(-1.0, 2.0, 4.0, 0.25, path)
    with pytest.raises(ParameterError):
        sbo_eigenvalues(0.0, 2.0, 4.0, 0.25, 1)
