import math

import numpy as np
import pytest

from hardedge.ensemble import (LowerBidiagonal, SymmetricTridiagonal, chi_indices, conjugate_antidiagonal,
                               gram_tridiagonal, inverse_kernel, limit_kernel_value, operator_norm_sq,
                               sample_model, sample_scaled_minima, scaled_minima_array)
from hardedge.exceptions import ParameterError, SingularityError
from hardedge.rng import EnvironmentPath, RandomStream, sample_chi
from hardedge.stats import dkw_band, exponential_cdf


def test_single_entry_square_mean():
    beta, a, N = 2.0, 0.5, 10 ** 5
    x2 = np.array([sample_model(1, beta, a, RandomStream(1, i)).diag[0] ** 2 for i in range(N)])
    # chi^2_r / beta with r = (a+1) beta has mean a+1 and variance 2r / beta^2
    r = (a + 1) * beta
    assert abs(x2.mean() - (a + 1)) < 4 * math.sqrt(2 * r / beta ** 2 / N)


def test_chi_index_pattern():
    d, s = chi_indices(3, 2.0, 0.0)
    assert np.array_equal(d, [6, 4, 2]) and np.array_equal(s, [4, 2])


def test_sample_model_reproducible_and_checked():
    A = sample_model(5, 1.5, 0.3, RandomStream(9, 2))
    B = sample_model(5, 1.5, 0.3, RandomStream(9, 2))
    assert np.array_equal(A.diag, B.diag) and np.array_equal(A.superdiag, B.superdiag)
    for n, beta, a in ((0, 2, 0), (3, 0, 0), (3, 2, -1), (3, -1, 0)):
        with pytest.raises(ParameterError):
            sample_model(n, beta, a, RandomStream(1))


def test_gram_examples():
    from hardedge.ensemble import BidiagonalModel
    T = gram_tridiagonal(BidiagonalModel(2, 2.0, 0.0, [1.0, 2.0], [3.0]))
    assert np.array_equal(T.diag, [10.0, 4.0]) and np.array_equal(T.offdiag, [6.0])
    T1 = gram_tridiagonal(BidiagonalModel(1, 2.0, 0.0, [1.5], []))
    assert T1.diag[0] == 2.25 and T1.offdiag.size == 0


def test_gram_matches_dense_product():
    for i in range(20):
        L = sample_model(6, 2.0, 0.7, RandomStream(3, i))
        D = L.to_dense()
        ref = D @ D.T
        got = gram_tridiagonal(L).to_dense()
        assert np.max(np.abs(got - ref)) <= 1e-14 * np.max(np.abs(ref))
        assert np.count_nonzero(np.triu(ref, 2)) == 0


@pytest.mark.parametrize("n", [1, 2, 8])
def test_conjugate_same_spectrum(n):
    L = sample_model(n, 1.0, 0.5, RandomStream(4, n))
    M = conjugate_antidiagonal(L)
    D = M.to_dense()
    assert np.allclose(np.linalg.eigvalsh(D @ D.T), np.linalg.eigvalsh(L.to_dense() @ L.to_dense().T),
                       rtol=1e-12, atol=0)
    if n == 1:
        assert M.diag[0] == L.diag[0]
    assert np.all(M.diag > 0) and np.all(M.subdiag <= 0)


def test_conjugate_two_by_two():
    from hardedge.ensemble import BidiagonalModel
    M = conjugate_antidiagonal(BidiagonalModel(2, 2.0, 0.0, [1.0, 2.0], [3.0]))
    assert np.array_equal(M.to_dense(), [[2.0, 0.0], [-3.0, 1.0]])


def test_inverse_kernel_scalar():
    K = inverse_kernel(LowerBidiagonal([2.0], []))
    assert K.entry(1, 1) == 0.5
    assert K(0.3, 0.9) == 0.5


@pytest.mark.parametrize("seed", range(5))
def test_inverse_kernel_matches_dense_inverse(seed):
    n = 5
    M = conjugate_antidiagonal(sample_model(n, 2.0, 0.0, RandomStream(seed)))
    ref = n * np.linalg.inv(math.sqrt(n) * M.to_dense())
    K = inverse_kernel(M)
    got = K.matrix()
    assert np.max(np.abs(got - ref)) <= 1e-12 * np.max(np.abs(ref))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if j > i:
                assert K.entry(i, j) == 0.0
            else:
                assert K.entry(i, j) == pytest.approx(ref[i - 1, j - 1], rel=1e-12, abs=0)


def test_inverse_kernel_zero_subdiagonal():
    M = LowerBidiagonal([1.0, 2.0, 3.0], [0.0, -1.0])
    ref = 3 * np.linalg.inv(math.sqrt(3) * M.to_dense())
    assert np.allclose(inverse_kernel(M).matrix(), ref, rtol=1e-14, atol=1e-300)


def test_inverse_kernel_errors():
    with pytest.raises(SingularityError):
        inverse_kernel(LowerBidiagonal([1.0, 0.0], [-1.0]))
    with pytest.raises(ParameterError):
        inverse_kernel(LowerBidiagonal([1.0, 1.0], [1.0]))


def test_operator_norm_of_scaled_identity():
    c, n = 3.0, 4
    K = inverse_kernel(LowerBidiagonal(np.full(n, c), np.zeros(n - 1)))
    # kernel is sqrt(n)/c on the diagonal cells only; operator norm^2 = 1/(n c^2)
    assert operator_norm_sq(K) == pytest.approx(1 / (n * c * c), rel=1e-12)


@pytest.mark.parametrize("n", [1, 30])
def test_operator_norm_identity(n):
    for i in range(3):
        M = conjugate_antidiagonal(sample_model(n, 2.0, 0.0, RandomStream(17, 10 * n + i)))
        D = M.to_dense()
        lam = np.linalg.eigvalsh(D @ D.T)[0]
        assert abs(operator_norm_sq(inverse_kernel(M)) * n * lam - 1) <= 1e-8


def test_limit_kernel_deterministic():
    zero = EnvironmentPath.zero(np.linspace(0, 5, 11))
    assert limit_kernel_value(1.0, 0.25, 2.0, 2.0, zero) == pytest.approx(0.25, rel=1e-14)
    assert limit_kernel_value(0.25, 1.0, 2.0, 2.0, zero) == 0.0
    assert limit_kernel_value(0.5, 0.5, 2.0, 2.0, zero) == 0.0


def test_limit_kernel_log_mean():
    x, y, a, beta, N = 0.8, 0.1, 0.5, 2.0, 10 ** 4
    grid = np.linspace(0, 3, 31)
    tx, ty = math.log(1 / x), math.log(1 / y)
    logs = np.array([math.log(limit_kernel_value(x, y, a, beta, EnvironmentPath.sample(grid, RandomStream(5, i))))
                     for i in range(N)])
    mean = -(1 + a) / 2 * math.log(x) + a / 2 * math.log(y)
    # linear interpolation between grid points only lowers the variance, so the bound is conservative
    assert abs(logs.mean() - mean) < 4 * math.sqrt((ty - tx) / beta / N)


def test_law_of_large_numbers_scaling():
    n, beta, a, N = 10 ** 4, 2.0, 0.0, 1000
    for x in (0.25, 0.5, 0.9):
        r = (math.floor(n * x) + a) * beta
        v = math.sqrt(n * beta) / sample_chi(r, RandomStream(6, int(100 * x)), size=N)
        sd = v.std()
        assert abs(v.mean() - 1 / math.sqrt(x)) < 3 * sd / math.sqrt(N) + 1e-3


def test_scaled_minima_exponential_small_n():
    d = sample_scaled_minima(10, 2.0, 0.0, 2, 10 ** 4, seed=4)
    assert d[0].ks_distance(exponential_cdf(1.0)) <= dkw_band(10 ** 4, 0.01)
    assert np.all(d[0].samples < np.sort(d[1].samples))


def test_scaled_minima_beta4_rate():
    d = sample_scaled_minima(10, 4.0, -0.5, 1, 10 ** 4, seed=5)[0]
    assert d.ks_distance(exponential_cdf(2.0)) <= dkw_band(10 ** 4, 0.01)


def test_scaled_minima_rows_ordered_and_reproducible():
    A = scaled_minima_array(8, 1.0, 0.5, 3, 50, seed=2)
    assert np.all(np.diff(A, axis=1) > 0)
    assert np.array_equal(A, scaled_minima_array(8, 1.0, 0.5, 3, 50, seed=2))
    assert np.array_equal(A[10:], scaled_minima_array(8, 1.0, 0.5, 3, 40, seed=2, first_stream=10))
    with pytest.raises(ParameterError):
        scaled_minima_array(8, 1.0, 0.5, 9, 5, seed=1)


def test_symmetric_tridiagonal_shape_checked():
    with pytest.raises(ParameterError):
        SymmetricTridiagonal([1.0, 2.0], [1.0, 1.0])
