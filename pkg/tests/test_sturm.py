import json
import math

import numpy as np
import pytest

from convexspec.specfun import bessel_j, bessel_zero
from convexspec.sturm import (
    ProfileWeight,
    kroger_bound,
    maximizer_profile,
    optimize_peak,
    optimize_trapezoid,
    random_concave_profile,
    sl_eigs,
    strictness_check,
)

J01 = 2.404825557695773


def tent(d=2):
    return ProfileWeight(np.array([0.0, 0.5, 1.0]), np.array([0.0, 1.0, 0.0]), d)


class TestProfileWeight:
    def test_not_concave_rejected(self):
        with pytest.raises(ValueError):
            ProfileWeight([0.0, 0.5, 1.0], [0.0, 0.1, 1.0])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            ProfileWeight([0.0, 1.0], [-0.5, 1.0])

    def test_span_enforced(self):
        with pytest.raises(ValueError):
            ProfileWeight([0.1, 1.0], [1.0, 1.0])

    def test_json_roundtrip(self):
        w = tent(3)
        again = ProfileWeight.from_json(json.dumps(w.to_json()))
        assert again.dim == 3
        assert np.array_equal(again.breakpoints, w.breakpoints)
        assert np.array_equal(again.q_values, w.q_values)

    def test_p_is_q_power(self):
        w = tent(4)
        xs = np.linspace(0, 1, 11)
        assert np.allclose(w.p(xs), w.q(xs) ** 3)


class TestSlEigs:
    def test_constant_weight_cosines(self):
        # p = 1: mu_k = (k pi)^2; P1 consistent-mass error follows mu h^2 / 12
        w = ProfileWeight([0.0, 1.0], [1.0, 1.0])
        res = sl_eigs(w, 3, 512)
        for k in (1, 2, 3):
            exact = (k * math.pi) ** 2
            rel = abs(res.values[k] - exact) / exact
            assert rel < 2.0 * exact * (1 / 512) ** 2 / 12
        res = sl_eigs(w, 3, 4096)
        for k in (1, 2, 3):
            exact = (k * math.pi) ** 2
            assert abs(res.values[k] - exact) / exact < 1e-6

    def test_zero_mode(self):
        res = sl_eigs(tent(), 1, 256)
        assert abs(res.values[0]) <= 1e-9 * res.values[1]
        v0 = res.vectors[:, 0]
        assert np.max(np.abs(v0 - v0.mean())) <= 1e-6 * abs(v0.mean())

    def test_tent_d2(self):
        res = sl_eigs(tent(2), 1, 2048)
        target = 4 * J01**2
        assert abs(res.values[1] - target) / target < 1e-4

    def test_tent_d3(self):
        res = sl_eigs(tent(3), 1, 2048)
        target = kroger_bound(1, 3)  # (2 pi)^2 by the closed form
        assert target == pytest.approx(4 * math.pi**2, rel=1e-15)
        assert abs(res.values[1] - target) / target < 1e-4

    def test_upper_bound_monotone_under_refinement(self):
        w = random_concave_profile(np.random.default_rng(2), dim=2)
        vals = [sl_eigs(w, 3, n).values for n in (64, 128, 256, 512)]
        for a, b in zip(vals, vals[1:]):
            assert np.all(b[1:] <= a[1:] + 1e-11 * np.abs(a[1:]))

    def test_weight_scaling_invariance(self):
        w = random_concave_profile(np.random.default_rng(3), dim=3)
        base = sl_eigs(w, 2, 256).values
        scaled = sl_eigs(w.scaled_p(7.5), 2, 256).values
        assert np.allclose(scaled[1:], base[1:], rtol=1e-10)

    def test_reflection_symmetry(self):
        w = random_concave_profile(np.random.default_rng(4), dim=2)
        base = sl_eigs(w, 2, 256).values
        refl = sl_eigs(w.reflected(), 2, 256).values
        assert np.allclose(refl[1:], base[1:], rtol=1e-10)

    def test_weighted_normalization_and_orthogonality(self):
        w = tent(2)
        n = 256
        res = sl_eigs(w, 3, n)
        # rebuild the mass matrix through a fine quadrature of u_i u_j p
        xs = np.linspace(0, 1, 20001)
        pw = w.p(xs)
        gram = np.empty((4, 4))
        for i in range(4):
            ui = np.interp(xs, np.linspace(0, 1, n + 1), res.vectors[:, i])
            for j in range(4):
                uj = np.interp(xs, np.linspace(0, 1, n + 1), res.vectors[:, j])
                gram[i, j] = np.trapezoid(ui * uj * pw, xs)
        assert np.max(np.abs(gram - np.eye(4))) < 1e-6

    def test_eigenfunction_matches_bessel_profile(self):
        # the k=1, d=2 maximizer eigenfunction is J0(2 j01 x), odd about 1/2
        n = 1024
        res = sl_eigs(tent(2), 1, n)
        xs = np.linspace(0, 1, n + 1)
        u = res.vectors[:, 1].copy()
        exact = np.where(xs <= 0.5, bessel_j(0, 2 * J01 * xs), -bessel_j(0, 2 * J01 * (1 - xs)))
        # align sign and scale at the left endpoint region
        u *= np.sign(u[0]) * np.sign(exact[0])
        u *= np.max(np.abs(exact)) / np.max(np.abs(u))
        assert np.max(np.abs(u - exact)) < 1e-3

    def test_too_coarse_rejected(self):
        with pytest.raises(ValueError):
            sl_eigs(tent(), 4, 16)


class TestKrogerBound:
    def test_d2_values(self):
        assert kroger_bound(1, 2) == pytest.approx(4 * J01**2, rel=1e-13)
        assert kroger_bound(2, 2) == pytest.approx((2 * J01 + math.pi) ** 2, rel=1e-13)

    def test_d3_values(self):
        for k in range(1, 6):
            assert kroger_bound(k, 3) == pytest.approx(((k + 1) * math.pi) ** 2, rel=1e-14)

    def test_d4_even_odd(self):
        j11 = bessel_zero(1, 1)
        j12 = bessel_zero(1, 2)
        assert kroger_bound(1, 4) == pytest.approx(4 * j11**2, rel=1e-13)
        assert kroger_bound(2, 4) == pytest.approx((j11 + j12) ** 2, rel=1e-13)

    def test_d2_sqrt_spacing_is_pi(self):
        roots = [math.sqrt(kroger_bound(k, 2)) for k in range(1, 8)]
        for a, b in zip(roots, roots[1:]):
            assert b - a == pytest.approx(math.pi, abs=1e-12)

    def test_range_errors(self):
        with pytest.raises(ValueError):
            kroger_bound(0, 2)
        with pytest.raises(ValueError):
            kroger_bound(1, 23)


class TestMaximizers:
    def test_tent_shape(self):
        w = maximizer_profile(1, 2)
        assert w.breakpoints.tolist() == [0.0, 0.5, 1.0]
        assert w.q_values.tolist() == [0.0, 1.0, 0.0]

    def test_tent_any_dimension(self):
        w = maximizer_profile(1, 5)
        assert w.dim == 5
        assert w.q_values.tolist() == [0.0, 1.0, 0.0]

    def test_k1_plateau_rejected(self):
        with pytest.raises(ValueError):
            maximizer_profile(1, 2, plateau=0.3)

    def test_d3_multisegment_family_rejected(self):
        with pytest.raises(ValueError):
            maximizer_profile(2, 3)

    @pytest.mark.parametrize(
        "k,d,target",
        [
            (2, 2, (2 * J01 + math.pi) ** 2),
            (3, 2, (2 * J01 + 2 * math.pi) ** 2),
        ],
    )
    def test_trapezoid_reaches_bound(self, k, d, target):
        bound = kroger_bound(k, d)
        assert bound == pytest.approx(target, rel=1e-13)
        opt = optimize_trapezoid(k, d, n_elems=1024)
        assert abs(opt.mu_k - bound) / bound < 1e-3
        w = maximizer_profile(k, d, plateau=opt.plateau)
        mu = sl_eigs(w, k, 1024).values[k]
        assert abs(mu - bound) / bound < 1e-3

    def test_d2_plateau_matches_phase_count(self):
        # plateau carries the cosine phase (k-1) pi, sides j01 each
        opt = optimize_trapezoid(2, 2, n_elems=512)
        assert opt.plateau == pytest.approx(math.pi / (2 * J01 + math.pi), abs=1e-3)

    def test_even_k_high_d_needs_peak_family(self):
        # the symmetric trapezoid family tops out below the sharp value here
        with pytest.raises(ValueError):
            optimize_trapezoid(2, 4)
        bound = kroger_bound(2, 4)
        opt = optimize_peak(2, 4, n_elems=1024)
        assert abs(opt.mu_k - bound) / bound < 1e-3
        j11, j12 = bessel_zero(1, 1), bessel_zero(1, 2)
        assert opt.peak == pytest.approx(j11 / (j11 + j12), abs=1e-3)
        w = maximizer_profile(2, 4)
        assert abs(sl_eigs(w, 2, 2048).values[2] - bound) / bound < 1e-4

    def test_odd_k_high_d_tent(self):
        # odd k in d >= 4: the tent attains the bound (both searches agree)
        bound = kroger_bound(3, 4)
        assert abs(sl_eigs(maximizer_profile(3, 4), 3, 2048).values[3] - bound) / bound < 1e-4
        opt = optimize_peak(3, 4, n_elems=512)
        assert opt.peak == pytest.approx(0.5, abs=1e-3)


class TestStrictness:
    def test_random_profiles_stay_below(self):
        rng = np.random.default_rng(8)
        for _ in range(60):
            w = random_concave_profile(rng, dim=2)
            for k in (1, 2, 3):
                assert strictness_check(w, k, 256)

    def test_equality_case_within_tolerance(self):
        assert strictness_check(maximizer_profile(1, 2), 1, 1024)

    def test_constant_weight_margin(self):
        w = ProfileWeight([0.0, 1.0], [1.0, 1.0])
        mu1 = sl_eigs(w, 1, 512).values[1]
        margin = kroger_bound(1, 2) - mu1
        assert margin == pytest.approx(4 * J01**2 - math.pi**2, abs=1e-3)
        assert margin == pytest.approx(13.26, abs=0.01)
        assert strictness_check(w, 1, 512)
