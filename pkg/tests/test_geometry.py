import json
import math

import numpy as np
import pytest

from convexspec import geometry as geo
from convexspec.geometry import (
    ConvexPolygon,
    diameter,
    flatness,
    john_ellipse,
    load_polygon,
    make_triangle,
    profile,
    save_polygon,
    section_moment,
    width_orthogonal,
)
from convexspec.harness import random_convex_polygon

UNIT_SQUARE = ConvexPolygon([[0, 0], [1, 0], [1, 1], [0, 1]])


class TestConvexPolygon:
    def test_clockwise_rejected(self):
        with pytest.raises(ValueError):
            ConvexPolygon([[0, 0], [0, 1], [1, 1], [1, 0]])

    def test_collinear_rejected(self):
        with pytest.raises(ValueError):
            ConvexPolygon([[0, 0], [0.5, 0.0], [1, 0], [1, 1], [0, 1]])

    def test_too_few_vertices(self):
        with pytest.raises(ValueError):
            ConvexPolygon([[0, 0], [1, 0]])

    def test_area_and_centroid(self):
        assert UNIT_SQUARE.area == pytest.approx(1.0)
        assert UNIT_SQUARE.centroid == pytest.approx([0.5, 0.5])


class TestDiameter:
    def test_unit_square(self):
        info = diameter(UNIT_SQUARE)
        assert info.length == pytest.approx(math.sqrt(2), abs=1e-14)
        # lexicographic tie-break among the two diagonals
        assert info.endpoints[0].tolist() == [0, 0]
        assert info.endpoints[1].tolist() == [1, 1]

    def test_superequilateral_base_is_diameter(self):
        alpha = 0.7 * math.pi
        T = make_triangle(alpha, 1.0 / (2 * math.sin(alpha / 2)))
        assert diameter(T).length == pytest.approx(1.0, abs=1e-14)

    def test_hexagon(self):
        hexagon = geo.regular_polygon(6, radius=1.0)
        assert diameter(hexagon).length == pytest.approx(2.0, abs=1e-14)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            poly = random_convex_polygon(rng, 14, aspect=float(rng.uniform(0.2, 1.0)))
            v = poly.vertices
            brute = max(
                np.linalg.norm(v[i] - v[j]) for i in range(len(v)) for j in range(i + 1, len(v))
            )
            assert diameter(poly).length == pytest.approx(brute, rel=1e-13)

    def test_rigid_motion_invariance(self):
        rng = np.random.default_rng(5)
        poly = random_convex_polygon(rng, 10)
        d0 = diameter(poly).length
        for ang in rng.uniform(0, 2 * math.pi, 10):
            moved = poly.transformed(rot=float(ang), shift=(rng.normal(), rng.normal()))
            assert diameter(moved).length == pytest.approx(d0, rel=1e-12)


class TestWidth:
    def test_square_along_diagonal(self):
        d = np.array([1.0, 1.0]) / math.sqrt(2)
        assert width_orthogonal(UNIT_SQUARE, d) == pytest.approx(math.sqrt(2), abs=1e-14)

    def test_triangle_height(self):
        alpha, l = 0.7 * math.pi, 1.3
        T = make_triangle(alpha, l)
        w = width_orthogonal(T, np.array([1.0, 0.0]))
        assert w == pytest.approx(l * math.cos(alpha / 2), abs=1e-14)

    def test_rectangle(self):
        rect = ConvexPolygon([[0, 0], [2, 0], [2, 1], [0, 1]])
        assert width_orthogonal(rect, np.array([1.0, 0.0])) == pytest.approx(1.0)

    def test_requires_unit_direction(self):
        with pytest.raises(ValueError):
            width_orthogonal(UNIT_SQUARE, np.array([1.0, 1.0]))


class TestJohnEllipse:
    def test_square_gives_incircle(self):
        sq = ConvexPolygon([[-1, -1], [1, -1], [1, 1], [-1, 1]])
        e = john_ellipse(sq)
        assert e.a1 == pytest.approx(1.0, abs=1e-9)
        assert e.a2 == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(e.center, 0.0, atol=1e-9)

    def test_rectangle_axes(self):
        rect = ConvexPolygon([[0, 0], [3, 0], [3, 1], [0, 1]])
        e = john_ellipse(rect)
        assert e.a1 == pytest.approx(1.5, abs=1e-9)
        assert e.a2 == pytest.approx(0.5, abs=1e-9)

    def test_equilateral_incircle(self):
        s = 1.0
        T = make_triangle(math.pi / 3, s)
        e = john_ellipse(T)
        assert e.a2 == pytest.approx(s / (2 * math.sqrt(3)), abs=1e-9)
        assert e.a1 == pytest.approx(s / (2 * math.sqrt(3)), abs=1e-9)

    def test_containment_certificates(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            poly = random_convex_polygon(rng, 12, aspect=float(rng.uniform(0.15, 1.0)))
            e = john_ellipse(poly)
            a, b = poly.edge_halfplanes()
            # ellipse inside the polygon
            assert np.all(e.support(a) <= b + 1e-9)
            # vertices inside the doubled ellipse
            u = (poly.vertices - e.center) @ np.linalg.inv(e.matrix).T
            assert np.all(np.linalg.norm(u, axis=1) <= 2.0 + 1e-9)


class TestFlatness:
    def test_triangle_values(self):
        fl = flatness(make_triangle(2 * math.pi / 3, 1.0))
        assert fl.D == pytest.approx(math.sqrt(3), abs=1e-12)
        assert fl.w == pytest.approx(0.5, abs=1e-12)

    def test_thin_rectangle_tight(self):
        # diameter of the thin rectangle is its diagonal, so the orthogonal
        # width is 2*eps and the equivalence w/2 <= 2 a2 is tight here
        eps = 1e-3
        rect = ConvexPolygon([[0, 0], [1, 0], [1, eps], [0, eps]])
        fl = flatness(rect)
        assert fl.a2 == pytest.approx(eps / 2, rel=1e-6)
        assert fl.w == pytest.approx(2 * eps, rel=1e-5)
        assert fl.w / 2 == pytest.approx(2 * fl.a2, rel=1e-5)

    def test_equivalence_sandwich(self):
        # w and a2 measure flatness within a factor 2: a2 <= w/2 <= 2 a2
        rng = np.random.default_rng(31)
        for _ in range(40):
            poly = random_convex_polygon(rng, 12, aspect=float(rng.uniform(0.1, 1.0)))
            fl = flatness(poly)
            assert fl.a2 - 1e-9 <= fl.w / 2 <= 2 * fl.a2 + 1e-9


class TestProfile:
    def test_triangle_tent(self):
        alpha = 0.75 * math.pi
        T = make_triangle(alpha, 1.0 / (2 * math.sin(alpha / 2)))
        pw = profile(T)
        w = math.cos(alpha / 2) / (2 * math.sin(alpha / 2))
        xs = np.linspace(0.01, 0.99, 37)
        expected = w * np.minimum(2 * xs, 2 * (1 - xs))
        assert np.allclose(pw.q(xs), expected, atol=1e-12)
        assert pw.q(np.array([0.0, 1.0])).tolist() == [0.0, 0.0]

    def test_disk_chord(self):
        disk = geo.regular_polygon(256, radius=0.5, center=(0.5, 0.5))
        pw = profile(disk)
        xs = np.linspace(0.02, 0.98, 49)
        expected = 2 * np.sqrt(0.25 - (xs - 0.5) ** 2)
        assert np.max(np.abs(pw.q(xs) - expected)) < 1e-3

    def test_thin_rectangle_constant(self):
        eps = 0.01
        rect = ConvexPolygon([[0, 0], [1, 0], [1, eps], [0, eps]])
        pw = profile(rect)
        xs = np.linspace(0.1, 0.9, 9)
        assert np.max(np.abs(pw.q(xs) - eps)) < 1e-5

    def test_concavity_midpoints(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            poly = random_convex_polygon(rng, 10)
            pw = profile(poly)
            x = rng.uniform(0, 1, 100)
            y = rng.uniform(0, 1, 100)
            mid = pw.q((x + y) / 2)
            assert np.all(mid >= 0.5 * (pw.q(x) + pw.q(y)) - 1e-10)


class TestSectionMoment:
    def test_interval_moment(self):
        # vertical section of this rectangle at x=1 is [0, 0.7]
        rect = ConvexPolygon([[0, 0], [2, 0], [2, 0.7], [0, 0.7]])
        sm = section_moment(rect, 1.0)
        assert sm.c == pytest.approx(0.35)
        assert sm.m2 == pytest.approx(0.7**3 / 12.0, rel=1e-14)

    def test_ratio_constant_across_sections(self):
        rng = np.random.default_rng(13)
        poly = random_convex_polygon(rng, 12)
        xs = poly.vertices[:, 0]
        for x in np.linspace(xs.min() + 1e-3, xs.max() - 1e-3, 25):
            sm = section_moment(poly, float(x))
            lo, hi = geo._section_interval(poly, float(x))
            p = hi - lo
            if p > 1e-9:
                assert sm.m2 / p**3 == pytest.approx(1.0 / 12.0, rel=1e-12)

    def test_center_affine_on_linear_pieces(self):
        rng = np.random.default_rng(17)
        poly = random_convex_polygon(rng, 9)
        xs = np.sort(np.unique(poly.vertices[:, 0]))
        # inside one piece both boundary chains are affine, hence so is c
        for a, b in zip(xs[:-1], xs[1:]):
            if b - a < 1e-6:
                continue
            t = np.linspace(a + 1e-9 * (b - a), b - 1e-9 * (b - a), 20)
            c = np.array([section_moment(poly, float(x)).c for x in t])
            coef = np.polyfit(t, c, 1)
            assert np.max(np.abs(np.polyval(coef, t) - c)) < 1e-10

    def test_outside_projection(self):
        with pytest.raises(ValueError):
            section_moment(UNIT_SQUARE, 1.5)


class TestMakeTriangle:
    def test_equilateral(self):
        T = make_triangle(math.pi / 3, 1.0)
        v = T.vertices
        assert np.linalg.norm(v[1] - v[0]) == pytest.approx(1.0)
        assert np.linalg.norm(v[2] - v[1]) == pytest.approx(1.0)

    def test_right_isosceles(self):
        T = make_triangle(math.pi / 2, 1.0)
        assert np.linalg.norm(T.vertices[1] - T.vertices[0]) == pytest.approx(math.sqrt(2))

    def test_collapsing_limit(self):
        l = 0.7
        T = make_triangle(0.999 * math.pi, l)
        base = np.linalg.norm(T.vertices[1] - T.vertices[0])
        height = T.vertices[2, 1]
        assert base == pytest.approx(2 * l, rel=1e-5)
        assert height < 0.002

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            make_triangle(math.pi, 1.0)
        with pytest.raises(ValueError):
            make_triangle(1.0, -1.0)


class TestPolygonIO:
    def test_text_roundtrip(self, tmp_path):
        p = tmp_path / "poly.txt"
        save_polygon(UNIT_SQUARE, p)
        again = load_polygon(p)
        assert np.array_equal(again.vertices, UNIT_SQUARE.vertices)

    def test_json_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        poly = random_convex_polygon(rng, 8)
        p = tmp_path / "poly.json"
        save_polygon(poly, p, fmt="json")
        again = load_polygon(p)
        assert np.allclose(again.vertices, poly.vertices, rtol=0, atol=0)

    def test_comments_allowed(self, tmp_path):
        p = tmp_path / "poly.txt"
        p.write_text("# a square\n0 0\n1 0   # bottom right\n1 1\n0 1\n")
        assert load_polygon(p).area == pytest.approx(1.0)

    def test_17_digits(self, tmp_path):
        poly = ConvexPolygon([[0, 0], [1, 0], [1 / 3, 2 / 3]])
        p = tmp_path / "poly.txt"
        save_polygon(poly, p)
        assert "0.33333333333333331" in p.read_text()
