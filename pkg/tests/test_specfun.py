import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from crystalbec.errors import ConvergenceError
from crystalbec.specfun import (dawson, dawson_asymptotic, dawson_taylor, erf_i_combo, mathieu_ce0,
                                mathieu_ce0_auto)


@pytest.mark.parametrize("x", [1e-6, 0.1, 0.5, 0.924, 1.5, 3.0, 10.0, 50.0])
def test_dawson_against_mpmath(x):
    mpmath.mp.dps = 30
    ref = mpmath.sqrt(mpmath.pi) / 2 * mpmath.exp(-x * x) * mpmath.erfi(x)
    assert dawson(x) == pytest.approx(float(ref), rel=1e-13)


def test_dawson_is_odd():
    xs = np.linspace(0, 5, 11)
    np.testing.assert_array_equal(dawson(-xs), -dawson(xs))


def test_dawson_asymptotic_large_x():
    for x in (8.0, 20.0):
        assert dawson_asymptotic(x, 3) == pytest.approx(dawson(x), rel=10 * 105 / (2 * x * x) ** 4)


def test_erf_i_combo():
    x = 0.7
    mpmath.mp.dps = 30
    ref = mpmath.exp(-x * x) * (1j * mpmath.erf(1j * x))
    assert erf_i_combo(x) == pytest.approx(float(mpmath.re(ref)), rel=1e-13)


def test_dawson_taylor_coefficients():
    d = dawson_taylor(5)
    assert d[:3] == (Fraction(1), Fraction(-2, 3), Fraction(4, 15))
    x = 0.05
    assert sum(float(c) * x ** (2 * k + 1) for k, c in enumerate(dawson_taylor(12))) == pytest.approx(dawson(x), rel=1e-15)


def test_mathieu_zero_q():
    r = mathieu_ce0(0.0)
    assert r.char_value == 0.0
    assert r.fourier_coeffs[0] == pytest.approx(1 / math.sqrt(2))


@pytest.mark.parametrize("q", [0.3, 2.0, -5.0])
def test_mathieu_normalization_and_ode_residual(q):
    r = mathieu_ce0(q)
    # normalization (1/pi) int_0^{2pi} ce0^2 = 1 and the ODE residual
    v = np.linspace(0, 2 * np.pi, 4001)
    y = r(v)
    assert np.trapezoid(y * y, v) / math.pi == pytest.approx(1.0, rel=1e-9)
    vv = np.array([0.3, 1.1, 2.0])
    h = 1e-4
    ypp = (r(vv + h) - 2 * r(vv) + r(vv - h)) / h**2
    np.testing.assert_allclose(ypp + (r.char_value - 2 * q * np.cos(2 * vv)) * r(vv), 0.0, atol=1e-5)


def test_mathieu_small_q_series():
    q = 0.01
    # absolute accuracy of the eigenvalue is about eps * (2 * truncation)^2
    assert mathieu_ce0(q).char_value == pytest.approx(-q * q / 2 + 7 * q**4 / 128 - 29 * q**6 / 2304, abs=1e-11)
    assert mathieu_ce0(q, truncation=12).char_value == pytest.approx(-4.99994531375864416e-05, abs=1e-15)


def test_mathieu_even_in_q():
    assert mathieu_ce0(3.0).char_value == pytest.approx(mathieu_ce0(-3.0).char_value, rel=1e-14)


def test_mathieu_derivative():
    r = mathieu_ce0(1.5)
    h = 1e-6
    assert r.derivative(0.4) == pytest.approx((r(0.4 + h) - r(0.4 - h)) / (2 * h), rel=1e-7)


def test_mathieu_convergence_gate():
    with pytest.raises(ConvergenceError):
        mathieu_ce0(5000.0, truncation=8)
    r = mathieu_ce0_auto(5000.0)
    assert r.truncation > 8
