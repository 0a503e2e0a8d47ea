import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.hermite_e import hermegauss
from scipy import special

from spherewaves import specfun
from spherewaves.specfun import (
    assoc_legendre_normalized,
    bessel_j0,
    chaos_coefficients,
    hermite,
    hilb_approximation,
    legendre_p,
    swinging_factorial_poly,
)


class TestLegendre:
    def test_values_match_scipy(self):
        x = np.linspace(-1, 1, 101)
        for n in (0, 1, 2, 7, 50, 300):
            assert np.allclose(legendre_p(n, x), special.eval_legendre(n, x), atol=1e-12)

    def test_endpoint_is_one(self):
        for n in (0, 5, 1000):
            assert legendre_p(n, 1.0) == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 2000), st.floats(-1, 1))
    def test_recurrence_consistency(self, n, x):
        p0, p1, p2 = (legendre_p(k, x) for k in (n - 1, n, n + 1))
        assert abs((n + 1) * p2 - (2 * n + 1) * x * p1 + n * p0) <= 1e-9

    def test_outside_domain_rejected(self):
        with pytest.raises(ValueError):
            legendre_p(3, 1.1)
        with pytest.raises(ValueError):
            legendre_p(-1, 0.2)


class TestAssociatedLegendre:
    def test_against_scipy_low_degree(self):
        x = np.linspace(-0.99, 0.99, 23)
        for ell in (0, 1, 4, 12, 25):
            for m in range(ell + 1):
                norm = math.sqrt((2 * ell + 1) / (4 * math.pi) * math.factorial(ell - m) / math.factorial(ell + m))
                # scipy includes the Condon-Shortley phase
                ref = (-1) ** m * norm * special.lpmv(m, ell, x)
                assert np.allclose(assoc_legendre_normalized(ell, m, x), ref, rtol=1e-10, atol=1e-13)

    @pytest.mark.parametrize("ell", [10, 500, 4000])
    def test_addition_sum_high_degree(self, ell):
        # sum over the real basis of Y^2 equals (2 ell + 1) / (4 pi) at every point
        x = np.cos(np.array([0.3, 1.0, 1.5707963, 2.9]))
        total = assoc_legendre_normalized(ell, 0, x) ** 2
        for m in range(1, ell + 1):
            total = total + 2 * assoc_legendre_normalized(ell, m, x) ** 2
        assert np.allclose(total * 4 * math.pi / (2 * ell + 1), 1.0, atol=1e-9)

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            assoc_legendre_normalized(3, 4, 0.1)


class TestBesselJ0:
    def test_zero(self):
        assert bessel_j0(0.0) == 1.0

    def test_against_mpmath(self):
        x = np.concatenate([np.linspace(0, 30, 301), [7.9, 8.0, 8.1, 11.99, 12.0, 12.01, 100.0, 1234.5]])
        ref = np.array([float(mpmath.besselj(0, float(v))) for v in x])
        assert np.max(np.abs(bessel_j0(x) - ref)) < 1e-12

    def test_against_scipy(self):
        x = np.linspace(0, 200, 2001)
        assert np.max(np.abs(bessel_j0(x) - special.j0(x))) < 1e-12

    def test_first_zero_by_bisection(self):
        lo, hi = 2.0, 3.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if bessel_j0(lo) * bessel_j0(mid) <= 0:
                hi = mid
            else:
                lo = mid
        assert lo == pytest.approx(2.404826, abs=1e-6)
        assert lo == pytest.approx(float(mpmath.besseljzero(0, 1)), abs=1e-12)

    def test_x8_against_extended_precision_series(self):
        with mpmath.workdps(50):
            x = mpmath.mpf(8)
            ref = mpmath.nsum(lambda k: (-1) ** k * (x / 2) ** (2 * k) / mpmath.factorial(k) ** 2, [0, 39])
        assert abs(bessel_j0(8.0) - float(ref)) < 1e-10

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            bessel_j0(-1.0)


class TestHermite:
    @pytest.mark.parametrize("t", [-1.0, 0.0, 2.0])
    def test_h2(self, t):
        assert hermite(2, t) == t * t - 1

    def test_examples(self):
        assert hermite(4, 0.0) == 3.0
        assert hermite(3, 1.0) == -2.0
        t = np.linspace(-3, 3, 13)
        assert np.allclose(hermite(4, t), t**4 - 6 * t**2 + 3)

    def test_orthogonality(self):
        nodes, weights = hermegauss(40)
        weights = weights / math.sqrt(2 * math.pi)
        for p in range(9):
            for q in range(9):
                val = np.sum(weights * hermite(p, nodes) * hermite(q, nodes))
                assert val == pytest.approx(math.factorial(q) if p == q else 0.0, abs=1e-6)

    def test_negative_order(self):
        with pytest.raises(ValueError):
            hermite(-1, 0.0)


class TestSwingingFactorial:
    def test_examples(self):
        assert swinging_factorial_poly(0, 0.25) == 1.0
        assert swinging_factorial_poly(1, 0.25) == 0.5
        assert swinging_factorial_poly(1, 0.0) == -1.0

    @pytest.mark.parametrize("n", [2, 5, 11, 20])
    def test_exact_rational(self, n):
        x = Fraction(1, 4)
        exact = sum(
            (-1) ** (n + j) * math.comb(n, j) * Fraction(math.factorial(2 * j + 1), math.factorial(j) ** 2) * x**j
            for j in range(n + 1)
        )
        assert swinging_factorial_poly(n, 0.25) == pytest.approx(float(exact), rel=1e-14, abs=1e-14)

    def test_limit(self):
        with pytest.raises(OverflowError):
            swinging_factorial_poly(21, 0.25)


class TestChaosCoefficients:
    def test_examples(self):
        t = chaos_coefficients(4)
        assert t.b(0) == pytest.approx(0.3989423, abs=1e-7)
        assert t.b(2) == pytest.approx(-1 / math.sqrt(2 * math.pi), rel=1e-15)
        assert t.a(0, 0) == pytest.approx(1.2533141, abs=1e-7)

    def test_low_order_alphas(self):
        t = chaos_coefficients(4)
        r = math.sqrt(math.pi / 2)
        assert t.a(2, 0) == pytest.approx(r / 2, rel=1e-14)
        assert t.a(0, 2) == pytest.approx(r / 2, rel=1e-14)
        assert t.a(4, 0) == pytest.approx(-3 * r / 8, rel=1e-14)
        assert t.a(2, 2) == pytest.approx(-r / 8, rel=1e-14)

    def test_beta_sign_and_magnitude(self):
        t = chaos_coefficients(40)
        for k in range(21):
            dfact = math.prod(range(2 * k - 1, 0, -2)) if k else 1
            assert abs(t.b(2 * k)) == pytest.approx(dfact / math.sqrt(2 * math.pi), rel=1e-13)
            assert math.copysign(1, t.b(2 * k)) == (-1) ** k

    def test_alpha_symmetric(self):
        t = chaos_coefficients(12)
        for n in range(7):
            for m in range(7 - n):
                assert t.alpha[n, m] == t.alpha[m, n]

    def test_tables_read_only(self):
        t = chaos_coefficients(4)
        with pytest.raises(ValueError):
            t.beta[0] = 1.0

    @pytest.mark.parametrize("bad", [3, -2, 42])
    def test_invalid_order(self, bad):
        with pytest.raises(ValueError):
            chaos_coefficients(bad)


class TestHilb:
    def test_prefactor_limit(self):
        th = 1e-8
        assert math.sqrt(th / math.sin(th)) == pytest.approx(1.0, abs=1e-15)
        assert hilb_approximation(5, 1e-9) == pytest.approx(1.0, abs=1e-12)

    def test_extended_precision_reference(self):
        with mpmath.workdps(40):
            th = mpmath.mpf(1)
            ref = mpmath.sqrt(th / mpmath.sin(th)) * mpmath.besselj(0, 50.5 * th)
        assert abs(hilb_approximation(50, 1.0) - float(ref)) < 1e-10

    def test_error_scales_like_ell_three_halves(self):
        scaled = []
        for ell in (50, 100, 200, 400, 800):
            th = np.linspace(1 / ell, math.pi / 2, 4000)
            scaled.append(ell**1.5 * np.max(np.abs(legendre_p(ell, np.cos(th)) - hilb_approximation(ell, th))))
        assert max(scaled) / min(scaled) <= 2.0
        ell = 100
        assert abs(hilb_approximation(ell, 0.5) - legendre_p(ell, math.cos(0.5))) <= max(scaled) * ell**-1.5

    @pytest.mark.parametrize("theta", [0.0, -0.1, math.pi - 0.05])
    def test_domain(self, theta):
        with pytest.raises(ValueError):
            hilb_approximation(10, theta)


def test_factorial_table():
    assert len(specfun.FACTORIALS) == 42
    assert specfun.FACTORIALS[20] == math.factorial(20)
