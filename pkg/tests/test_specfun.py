import math

import numpy as np
import pytest

from convexspec import specfun
from convexspec.specfun import bessel_j, bessel_zero, gauss_legendre, integrate

# frozen by bisection on bessel_j over the bracketing intervals [2,3] / [5,6]
J01 = 2.404825557695773
J02 = 5.520078110286311


def bisect(f, a, b, iters=200):
    fa = f(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f(m)
        if fa * fm <= 0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


class TestBesselJ:
    def test_at_zero(self):
        assert bessel_j(0, 0.0) == 1.0
        assert bessel_j(1, 0.0) == 0.0
        assert bessel_j(3.5, 0.0) == 0.0

    @pytest.mark.parametrize("x", [1.0, 2.0, 5.0])
    def test_half_integer_closed_form(self, x):
        # J_{1/2}(x) = sqrt(2/(pi x)) sin(x)
        exact = math.sqrt(2.0 / (math.pi * x)) * math.sin(x)
        assert bessel_j(0.5, x) == pytest.approx(exact, abs=1e-12)

    def test_derivative_identity(self):
        # J0' = -J1 via central differences
        rng = np.random.default_rng(7)
        x = rng.uniform(1e-3, 20.0, 100)
        d = 1e-5
        fd = (bessel_j(0, x + d) - bessel_j(0, x - d)) / (2 * d)
        assert np.max(np.abs(fd + bessel_j(1, x))) < 1e-6

    def test_series_asymptotic_seam(self):
        # both branches must agree where they hand over
        for nu in [0.0, 1.0, 5.0, 8.0, 10.0]:
            cut = np.array([max(14.0, 2 * nu)])
            lo = specfun._bessel_series(nu, cut)[0]
            hi = specfun._bessel_asymptotic(nu, cut)[0]
            assert abs(hi - lo) < 1e-12

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            bessel_j(-1.0, 1.0)
        with pytest.raises(ValueError):
            bessel_j(0.0, -0.5)


class TestBesselZero:
    def test_j01(self):
        ref = bisect(lambda t: bessel_j(0, t), 2.0, 3.0)
        assert abs(ref - J01) < 1e-13
        assert bessel_zero(0, 1) == pytest.approx(J01, abs=1e-11)

    def test_j02(self):
        ref = bisect(lambda t: bessel_j(0, t), 5.0, 6.0)
        assert abs(ref - J02) < 1e-13
        assert bessel_zero(0, 2) == pytest.approx(J02, abs=1e-11)

    def test_half_order_zero_is_pi(self):
        # J_{1/2} proportional to sin
        assert bessel_zero(0.5, 1) == pytest.approx(math.pi, abs=1e-11)
        assert bessel_zero(0.5, 7) == pytest.approx(7 * math.pi, abs=1e-10)

    def test_residual_scaled_by_slope(self):
        for nu in [0.0, 1.0, 2.5, 10.0]:
            for m in [1, 2, 5]:
                z = bessel_zero(nu, m)
                slope = specfun.bessel_j_derivative(nu, z)
                assert abs(bessel_j(nu, z)) <= 1e-12 * abs(slope) + 1e-15

    def test_ordering_and_count(self):
        # exactly m-1 zeros below the m-th: dense grid sign-change count
        nu, m = 1.5, 4
        z = bessel_zero(nu, m)
        grid = np.linspace(1e-3, z - 1e-6, 20000)
        signs = np.sign(bessel_j(nu, grid))
        crossings = int(np.sum(signs[:-1] * signs[1:] < 0))
        assert crossings == m - 1

    def test_interlacing(self):
        for nu in [0.0, 0.5, 1.0, 4.0, 9.0]:
            for m in [1, 2, 3, 5]:
                a = bessel_zero(nu, m)
                b = bessel_zero(nu + 1, m)
                c = bessel_zero(nu, m + 1)
                assert a < b < c

    def test_range_errors(self):
        with pytest.raises(ValueError):
            bessel_zero(11, 1)
        with pytest.raises(ValueError):
            bessel_zero(1, 21)


class TestGaussLegendre:
    def test_midpoint_rule(self):
        r = gauss_legendre(1)
        assert r.nodes.tolist() == [0.0]
        assert r.weights.tolist() == [2.0]

    @pytest.mark.parametrize("n", [2, 3, 5, 16, 64, 256])
    def test_invariants(self, n):
        r = gauss_legendre(n)
        assert abs(r.weights.sum() - 2.0) < 1e-14
        assert np.all(np.diff(r.nodes) > 0)
        assert np.max(np.abs(r.nodes + r.nodes[::-1])) < 1e-14
        assert np.all(r.weights > 0)

    @pytest.mark.parametrize("n", [2, 3, 4, 8, 32])
    def test_polynomial_exactness(self, n):
        # exact for monomials up to degree 2n-1
        r = gauss_legendre(n)
        for d in range(2 * n):
            got = float(np.dot(r.weights, r.nodes**d))
            exact = 0.0 if d % 2 else 2.0 / (d + 1)
            assert got == pytest.approx(exact, abs=2e-13)

    def test_degree3_with_two_nodes(self):
        r = gauss_legendre(2)
        assert float(np.dot(r.weights, r.nodes**2)) == pytest.approx(2 / 3, abs=1e-15)

    def test_x6_with_four_nodes(self):
        r = gauss_legendre(4)
        assert float(np.dot(r.weights, r.nodes**6)) == pytest.approx(2 / 7, abs=1e-14)


class TestIntegrate:
    def test_constant(self):
        assert integrate(lambda x: np.ones_like(x), 0, 1, gauss_legendre(2)) == pytest.approx(1.0)

    def test_sine(self):
        got = integrate(np.sin, 0, math.pi, gauss_legendre(8), panels=4)
        assert got == pytest.approx(2.0, abs=1e-12)

    def test_bessel_zero_identity(self):
        # int_0^{j01} t (J0^2 - J1^2) dt = 0
        j01 = bessel_zero(0, 1)
        f = lambda t: t * (bessel_j(0, t) ** 2 - bessel_j(1, t) ** 2)
        got = integrate(f, 0.0, j01, gauss_legendre(16), panels=8)
        assert abs(got) < 1e-10

    def test_scalar_function_fallback(self):
        got = integrate(math.exp, 0.0, 1.0, gauss_legendre(12), panels=2)
        assert got == pytest.approx(math.e - 1.0, abs=1e-13)

    def test_nonfinite_reported(self):
        with pytest.raises(FloatingPointError):
            integrate(lambda x: 1.0 / (x - 0.5), 0.4999999, 0.5000001, gauss_legendre(3), 1)

    def test_panel_doubling_convergence(self):
        # composite error on a smooth Bessel integrand drops >= 4x per doubling
        j01 = bessel_zero(0, 1)
        f = lambda x: bessel_j(0, 2 * j01 * x) ** 2
        r = gauss_legendre(2)
        exact = integrate(f, 0, 0.5, gauss_legendre(32), panels=16)
        errs = [abs(integrate(f, 0, 0.5, r, panels=p) - exact) for p in (1, 2, 4, 8)]
        for e0, e1 in zip(errs, errs[1:]):
            if e0 < 1e-14:
                break
            assert e1 <= e0 / 4.0
