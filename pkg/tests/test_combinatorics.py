import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
import mpmath
from scipy.special import loggamma

from speciesmix.combinatorics import (
    LogValue,
    complex_log_gamma,
    factor_quadratic,
    generalized_stirling,
    generalized_stirling_table,
    lah_number,
    log_gamma_ratio,
    log_gamma_ratio_real,
    log_lah_row,
    rising_factorial,
)


def test_logvalue_arithmetic():
    a, b = LogValue.from_float(3.0), LogValue.from_float(-2.0)
    assert float(a * b) == pytest.approx(-6.0)
    assert float(a / b) == pytest.approx(-1.5)
    assert float(a + b) == pytest.approx(1.0)
    assert float(b - a) == pytest.approx(-5.0)
    assert float(-a) == pytest.approx(-3.0)
    assert (a - a).is_zero
    assert float(LogValue.zero() + a) == pytest.approx(3.0)


def test_logvalue_handles_huge_magnitudes():
    big = LogValue(5000.0, 1)
    assert (big / big).isclose(LogValue.one(), 1e-15)


def test_rising_factorial_examples():
    assert float(rising_factorial(0.7, 0)) == 1.0
    assert float(rising_factorial(0.5, 3)) == pytest.approx(1.875, rel=1e-15)
    assert rising_factorial(-2.0, 4).is_zero


@settings(max_examples=60, deadline=None)
@given(st.floats(-20, 50).filter(lambda a: abs(a - round(a)) > 1e-3), st.integers(0, 300))
def test_rising_factorial_step(a, m):
    lhs = float(rising_factorial(a, m + 1).log_magnitude)
    rhs = float(rising_factorial(a, m).log_magnitude) + math.log(abs(a + m))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-11)
    assert rising_factorial(a, m + 1).sign == rising_factorial(a, m).sign * (1 if a + m > 0 else -1)


def test_lah_examples():
    assert float(lah_number(1, 1)) == 1
    assert all(float(lah_number(n, n)) == pytest.approx(1.0) for n in range(1, 30))
    assert float(lah_number(3, 2)) == pytest.approx(6.0)
    # known row n=4: 24, 36, 12, 1
    assert [round(float(lah_number(4, k))) for k in range(1, 5)] == [24, 36, 12, 1]


def test_lah_row_matches_scalar():
    for n in (5, 40, 1200):
        row = log_lah_row(n)
        for k in (1, n // 2 + 1, n):
            assert row[k - 1] == pytest.approx(lah_number(n, k).log_magnitude, rel=1e-12)


def test_generalized_stirling_is_lah_at_minus_one():
    logd, sgn = generalized_stirling_table(30, -1.0)
    for n in range(1, 31):
        for k in range(1, n + 1):
            assert sgn[n - 1, k - 1] == 1
            assert logd[n - 1, k - 1] == pytest.approx(lah_number(n, k).log_magnitude, rel=1e-12, abs=1e-13)


def test_generalized_stirling_examples():
    assert float(generalized_stirling(3, 2, 0.0)) == pytest.approx(3.0)
    for alpha in (-2.5, 0.0, 0.3, 0.9):
        for n in range(1, 12):
            assert float(generalized_stirling(n, 1, alpha)) == pytest.approx(float(rising_factorial(1 - alpha, n - 1)), rel=1e-12)


def test_generalized_stirling_stirling_numbers_at_zero():
    # alpha = 0 gives unsigned Stirling numbers of the first kind: row 5 = 24, 50, 35, 10, 1
    assert [round(float(generalized_stirling(5, k, 0.0))) for k in range(1, 6)] == [24, 50, 35, 10, 1]


def test_factor_quadratic_examples():
    f = factor_quadratic(0.4, 0.0)
    assert (f.z1, f.z2, f.s1, f.s2) == pytest.approx((0.0, 0.4, 0.0, -0.4))
    f = factor_quadratic(6.0, 9.0)
    assert (f.z1, f.z2, f.s1, f.s2) == pytest.approx((3.0, 3.0, -3.0, -3.0))
    f = factor_quadratic(1.0, 1.0)
    assert complex(f.z1) == pytest.approx(complex(f.z2).conjugate())
    assert complex(f.z1 * f.z2) == pytest.approx(1.0)


@settings(max_examples=80, deadline=None)
@given(st.floats(0, 20), st.floats(-5, 50))
def test_factor_quadratic_reconstructs(gamma, zeta):
    f = factor_quadratic(gamma, zeta)
    # x^2 - gamma x + zeta = (x - z1)(x - z2); x^2 + gamma x + zeta = (x - s1)(x - s2)
    scale = max(1.0, abs(gamma), abs(zeta))
    assert abs(complex(f.z1 + f.z2) - gamma) <= 1e-12 * scale
    assert abs(complex(f.z1 * f.z2) - zeta) <= 1e-12 * scale
    assert abs(complex(f.s1 + f.s2) + gamma) <= 1e-12 * scale
    assert abs(complex(f.s1 * f.s2) - zeta) <= 1e-12 * scale


def test_complex_log_gamma_examples():
    assert abs(complex_log_gamma(1)) < 1e-14
    assert complex_log_gamma(5) == pytest.approx(math.log(24), rel=1e-14)
    z = 0.3 + 0.7j
    lhs = cmath.exp(complex_log_gamma(z) + complex_log_gamma(1 - z))
    assert abs(lhs - math.pi / cmath.sin(math.pi * z)) < 1e-10


@settings(max_examples=200, deadline=None)
@given(st.floats(-30, 40), st.floats(-30, 30))
def test_complex_log_gamma_matches_scipy(x, y):
    z = complex(x, y)
    if y == 0 and x <= 0 and x == math.floor(x):
        return
    ref = complex(loggamma(z))
    assert abs(complex_log_gamma(z) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_complex_log_gamma_recurrence():
    for z in (0.2 + 3j, -4.5 + 0.1j, 12 - 7j):
        step = complex_log_gamma(z + 1) - complex_log_gamma(z) - cmath.log(z)
        step = (step.imag + math.pi) % (2 * math.pi) - math.pi + step.real * 1j
        assert abs(step) < 1e-12


def test_conjugate_gamma_product_is_real_positive():
    for gamma, zeta in ((1.0, 1.0), (2.0, 3.0), (0.5, 4.0)):
        f = factor_quadratic(gamma, zeta)
        s = complex_log_gamma(f.z1 + 1) + complex_log_gamma(f.z2 + 1)
        assert abs(math.sin(s.imag)) < 1e-10 and math.cos(s.imag) > 0


def test_log_gamma_ratio_both_regimes():
    mpmath.mp.dps = 40
    for x in (3.0, 150.0, 1e4, 1e8):
        for a, b in ((0.0, 1.0), (-0.5, 1.0), (2.5, -0.25)):
            ref = float(mpmath.loggamma(mpmath.mpf(x) + a) - mpmath.loggamma(mpmath.mpf(x) + b))
            assert log_gamma_ratio(x, a, b).real == pytest.approx(ref, rel=1e-12, abs=1e-12)
    xs = np.array([5.0, 500.0, 5e5, 5e9])
    ref = [float(mpmath.loggamma(mpmath.mpf(x) - mpmath.mpf(0.3)) - mpmath.loggamma(mpmath.mpf(x) + 4)) for x in xs]
    assert np.allclose(log_gamma_ratio_real(xs, -0.3, 4), ref, rtol=1e-12, atol=1e-12)
