import math

import mpmath
import numpy as np
import pytest
from scipy.special import jv, jn_zeros

from hardedge.bessel import bessel_j, bessel_zero, bessel_zeros
from hardedge.exceptions import ParameterError


def test_first_zero_order_zero():
    assert abs(bessel_zero(0.0, 1) - 2.404826) < 1e-6


def test_half_order_zeros_are_multiples_of_pi():
    # J_{1/2}(x) = sqrt(2/(pi x)) sin x
    z = bessel_zeros(0.5, 5)
    assert np.allclose(z, np.pi * np.arange(1, 6), rtol=1e-13, atol=0)


@pytest.mark.parametrize("a", [0.0, 1.0, 2.0, 3.0])
def test_integer_orders_against_scipy(a):
    assert np.allclose(bessel_zeros(a, 6), jn_zeros(int(a), 6), rtol=1e-12, atol=0)


@pytest.mark.parametrize("a", [0.25, 1.7, 4.5])
def test_fractional_orders_against_mpmath(a):
    ref = [float(mpmath.besseljzero(a, k)) for k in range(1, 4)]
    # function values are good to about 1e-11, which bounds the zero accuracy
    assert np.allclose(bessel_zeros(a, 3), ref, rtol=1e-10, atol=0)


def test_minus_half_order_zeros():
    # J_{-1/2}(x) = sqrt(2/(pi x)) cos x
    assert np.allclose(bessel_zeros(-0.5, 4), np.pi * (np.arange(1, 5) - 0.5), rtol=1e-12, atol=0)


def test_negative_order_against_mpmath_root():
    a = -0.3
    mpmath.mp.dps = 30
    for z in bessel_zeros(a, 3):
        ref = float(mpmath.findroot(lambda x: mpmath.besselj(a, x), z))
        assert abs(z - ref) <= 1e-10 * ref


@pytest.mark.parametrize("a", [-0.7, 0.0, 0.5, 2.0, 4.0])
def test_function_values_against_scipy(a):
    xs = np.concatenate((np.linspace(0.01, 30, 400), [12.0 + abs(a), 12.0 + abs(a) + 1e-9]))
    got = np.array([bessel_j(a, x) for x in xs])
    assert np.max(np.abs(got - jv(a, xs))) < 1e-10


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5, 2.0])
def test_zeros_increase_and_interlace(a):
    za = bessel_zeros(a, 6)
    zb = bessel_zeros(a + 1, 5)
    assert np.all(np.diff(za) > 0)
    for k in range(5):
        assert za[k] < zb[k] < za[k + 1]


def test_errors():
    with pytest.raises(ParameterError):
        bessel_zeros(-1.0, 2)
    with pytest.raises(ParameterError):
        bessel_zeros(0.0, 0)
    with pytest.raises(ParameterError):
        bessel_j(0.0, -1.0)
