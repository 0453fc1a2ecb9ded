"""Convex planar bodies and their flatness functionals.

A domain is a strictly convex counter-clockwise polygon.  The module computes
the diameter (rotating calipers), the width orthogonal to a direction, the
maximal-area inscribed (John) ellipse, the chord-length profile along the
diameter, and second moments of vertical sections.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sturm import ProfileWeight

__all__ = [
    "ConvexPolygon",
    "DiameterInfo",
    "Ellipse",
    "FlatnessInfo",
    "SectionMoment",
    "diameter",
    "width_orthogonal",
    "john_ellipse",
    "flatness",
    "profile",
    "make_triangle",
    "section_moment",
    "align_to_diameter",
    "regular_polygon",
    "load_polygon",
    "save_polygon",
]


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon, vertices counter-clockwise."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("need at least 3 planar vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = np.linalg.norm(e, axis=1)
        norm_cross = cross / (scale * np.roll(scale, -1) + 1e-300)
        if np.any(norm_cross <= 1e-12):
            raise ValueError("vertices are not strictly convex in CCW order")
        object.__setattr__(self, "vertices", v)
        v.flags.writeable = False

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    @property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cr = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        return (v + w).T @ cr / (6.0 * self.area)

    def edge_halfplanes(self):
        """Unit outward normals A and offsets b with interior {A x < b}."""
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        a = np.stack([e[:, 1], -e[:, 0]], axis=1)
        a /= np.linalg.norm(a, axis=1)[:, None]
        return a, np.einsum("ij,ij->i", a, v)

    def signed_distance(self, pts) -> np.ndarray:
        """max_i (a_i . x - b_i): negative inside, zero on the boundary."""
        a, b = self.edge_halfplanes()
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        return np.max(pts @ a.T - b[None, :], axis=1)

    def transformed(self, rot: float = 0.0, shift=(0.0, 0.0), scale: float = 1.0) -> "ConvexPolygon":
        c, s = math.cos(rot), math.sin(rot)
        r = np.array([[c, -s], [s, c]])
        return ConvexPolygon((self.vertices @ r.T + np.asarray(shift)) * scale)


@dataclass(frozen=True)
class DiameterInfo:
    length: float
    endpoints: tuple
    direction: np.ndarray


@dataclass(frozen=True)
class Ellipse:
    """{B u + c : |u| <= 1} reported as center, semiaxes a1 >= a2, tilt angle."""

    center: np.ndarray
    a1: float
    a2: float
    angle: float

    @property
    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        r = np.array([[c, -s], [s, c]])
        return r @ np.diag([self.a1, self.a2]) @ r.T

    def boundary_points(self, k: int = 64) -> np.ndarray:
        t = np.linspace(0, 2 * math.pi, k, endpoint=False)
        u = np.stack([np.cos(t), np.sin(t)], axis=1)
        return u @ self.matrix.T + self.center

    def support(self, dirs) -> np.ndarray:
        dirs = np.atleast_2d(dirs)
        return dirs @ self.center + np.linalg.norm(dirs @ self.matrix, axis=1)


@dataclass(frozen=True)
class FlatnessInfo:
    D: float
    w: float
    a2: float


@dataclass(frozen=True)
class SectionMoment:
    c: float
    m2: float


# ---------------------------------------------------------------------------
# diameter and width

def _hull_chains(points):
    pts = sorted(map(tuple, points))
    orient = lambda p, q, r: (q[1] - p[1]) * (r[0] - p[0]) - (q[0] - p[0]) * (r[1] - p[1])
    upper, lower = [], []
    for p in pts:
        while len(upper) > 1 and orient(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        while len(lower) > 1 and orient(lower[-2], lower[-1], p) >= 0:
            lower.pop()
        upper.append(p)
        lower.append(p)
    return upper, lower


def _antipodal_pairs(points):
    """Rotating calipers over the upper/lower hull chains."""
    upper, lower = _hull_chains(points)
    i, j = 0, len(lower) - 1
    while i < len(upper) - 1 or j > 0:
        yield upper[i], lower[j]
        if i == len(upper) - 1:
            j -= 1
        elif j == 0:
            i += 1
        elif (upper[i + 1][1] - upper[i][1]) * (lower[j][0] - lower[j - 1][0]) > (
            lower[j][1] - lower[j - 1][1]
        ) * (upper[i + 1][0] - upper[i][0]):
            i += 1
        else:
            j -= 1
    yield upper[-1], lower[0]


def diameter(poly: ConvexPolygon) -> DiameterInfo:
    """Largest vertex distance with its antipodal-pair certificate.

    Ties (square, regular polygons) break to the lexicographically smallest
    endpoint pair so downstream normalizations are deterministic.
    """
    pairs = [(p, q) for p, q in _antipodal_pairs(poly.vertices)]
    d2 = [(p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 for p, q in pairs]
    best = max(d2)
    if poly.area < 1e-14 * best:
        raise ValueError("degenerate polygon: area below 1e-14 * diameter^2")
    cands = [tuple(sorted((p, q))) for (p, q), s in zip(pairs, d2) if s >= best * (1 - 1e-12)]
    a, b = min(cands)
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    direction = np.array([b[0] - a[0], b[1] - a[1]]) / length
    return DiameterInfo(length, (np.array(a), np.array(b)), direction)


def width_orthogonal(poly: ConvexPolygon, direction) -> float:
    """Extent of the polygon along the perpendicular of a unit direction."""
    d = np.asarray(direction, dtype=np.float64)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    perp = np.array([-d[1], d[0]])
    proj = poly.vertices @ perp
    return float(proj.max() - proj.min())


# ---------------------------------------------------------------------------
# John ellipse: maximize log det B subject to ||B a_i|| + a_i.c <= b_i

def _barrier_value(theta, t, a, b):
    b11, b12, b22, c1, c2 = theta
    det = b11 * b22 - b12 * b12
    if det <= 0 or b11 <= 0:
        return np.inf
    v = np.stack([b11 * a[:, 0] + b12 * a[:, 1], b12 * a[:, 0] + b22 * a[:, 1]], axis=1)
    g = b - a[:, 0] * c1 - a[:, 1] * c2 - np.linalg.norm(v, axis=1)
    if np.any(g <= 0):
        return np.inf
    return -t * math.log(det) - float(np.sum(np.log(g)))


def _barrier_grad_hess(theta, t, a, b):
    """Analytic gradient and Hessian of t*(-log det B) - sum log g_i."""
    b11, b12, b22, c1, c2 = theta
    det = b11 * b22 - b12 * b12
    v1 = b11 * a[:, 0] + b12 * a[:, 1]
    v2 = b12 * a[:, 0] + b22 * a[:, 1]
    r = np.hypot(v1, v2)
    g = b - a[:, 0] * c1 - a[:, 1] * c2 - r
    inv_g = 1.0 / g

    # -log det part (B block only)
    gdet = np.array([b22, -2.0 * b12, b11])
    grad_f = np.concatenate([-t / det * gdet, [0.0, 0.0]])
    ddet = np.array([[0.0, 0.0, 1.0], [0.0, -2.0, 0.0], [1.0, 0.0, 0.0]])
    hess_f = np.zeros((5, 5))
    hess_f[:3, :3] = t * (np.outer(gdet, gdet) / det**2 - ddet / det)

    # barrier part: grad g_i = [-dr_i, -a_i], hess g_i = [[-hess_B r_i, 0], [0, 0]]
    dr = np.stack([a[:, 0] * v1 / r, (a[:, 1] * v1 + a[:, 0] * v2) / r, a[:, 1] * v2 / r], axis=1)
    gg = np.concatenate([-dr, -a], axis=1)
    grad_bar = -(gg.T @ inv_g)
    hess_bar = (gg * inv_g[:, None] ** 2).T @ gg
    # hess_B r = (J^T J - dr dr^T) / r with J = [[a1, a2, 0], [0, a1, a2]]
    a1, a2 = a[:, 0], a[:, 1]
    jtj = np.zeros((len(b), 3, 3))
    jtj[:, 0, 0] = a1 * a1
    jtj[:, 0, 1] = jtj[:, 1, 0] = a1 * a2
    jtj[:, 1, 1] = a1 * a1 + a2 * a2
    jtj[:, 1, 2] = jtj[:, 2, 1] = a1 * a2
    jtj[:, 2, 2] = a2 * a2
    hr = (jtj - dr[:, :, None] * dr[:, None, :]) / r[:, None, None]
    hess_bar[:3, :3] += np.einsum("i,ijk->jk", inv_g, hr)
    return grad_f + grad_bar, hess_f + hess_bar


def john_ellipse(poly: ConvexPolygon, gap_tol: float = 1e-11) -> Ellipse:
    """Maximal-area inscribed ellipse of a convex polygon.

    Log-det maximization with one second-order containment constraint per
    edge, solved by a damped-Newton barrier path; the Hessian is differenced
    from the analytic gradient (5 unknowns).  Terminates when the duality gap
    m/t of the barrier problem is below gap_tol.
    """
    a, b = poly.edge_halfplanes()
    m = len(b)
    # normalize for conditioning
    shift = poly.centroid
    scale = float(np.max(np.abs(poly.vertices - shift)))
    b = (b - a @ shift) / scale
    r0 = 0.5 * float(np.min(b))
    theta = np.array([r0, 0.0, r0, 0.0, 0.0])
    t = 1.0
    while True:
        for _ in range(100):
            grad, hess = _barrier_grad_hess(theta, t, a, b)
            try:
                step = np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                step = grad
            lam2 = float(grad @ step)
            if lam2 < 1e-12:
                break
            phi0 = _barrier_value(theta, t, a, b)
            s = 1.0
            accepted = False
            for _ in range(60):
                cand = theta - s * step
                if _barrier_value(cand, t, a, b) <= phi0 - 0.25 * s * lam2:
                    theta = cand
                    accepted = True
                    break
                s *= 0.5
            if not accepted:
                if lam2 < 1e-8:
                    break
                raise RuntimeError(
                    f"inscribed-ellipse Newton stalled, duality gap {m / t:.3e}"
                )
        if m / t < gap_tol:
            break
        t *= 30.0
    b11, b12, b22, c1, c2 = theta
    bmat = np.array([[b11, b12], [b12, b22]]) * scale
    center = np.array([c1, c2]) * scale + shift
    evals, evecs = np.linalg.eigh(bmat)
    a2, a1 = float(evals[0]), float(evals[1])
    angle = math.atan2(evecs[1, 1], evecs[0, 1])
    return Ellipse(center, a1, a2, angle)


def flatness(poly: ConvexPolygon) -> FlatnessInfo:
    """Diameter, width orthogonal to it, and second John semiaxis.

    The two flatness measures are equivalent up to a factor 2 in the sense
    a2 <= w/2 <= 2*a2, which follows from E <= Omega <= 2E for the John
    ellipse E.
    """
    info = diameter(poly)
    w = width_orthogonal(poly, info.direction)
    ell = john_ellipse(poly)
    return FlatnessInfo(info.length, w, ell.a2)


# ---------------------------------------------------------------------------
# profiles and sections

def align_to_diameter(poly: ConvexPolygon, unit: bool = False):
    """Rigidly move the polygon so its diameter spans [0, D] on the x-axis.

    With unit=True the result is additionally scaled to D = 1.  Returns the
    moved polygon and D.
    """
    info = diameter(poly)
    dx, dy = info.direction
    ang = -math.atan2(dy, dx)
    start = info.endpoints[0]
    moved = poly.transformed(rot=ang, shift=(0, 0))
    c, s = math.cos(ang), math.sin(ang)
    origin = np.array([c * start[0] - s * start[1], s * start[0] + c * start[1]])
    v = moved.vertices - origin
    if unit:
        v = v / info.length
    return ConvexPolygon(v), info.length


def _section_interval(poly: ConvexPolygon, x1: float):
    v = poly.vertices
    nxt = np.roll(v, -1, axis=0)
    ys = []
    for (x0, y0), (x2, y2) in zip(v, nxt):
        if (x0 - x1) * (x2 - x1) <= 0:
            if x0 == x2:
                ys.extend([y0, y2])
            else:
                ys.append(y0 + (x1 - x0) * (y2 - y0) / (x2 - x0))
    if not ys:
        raise ValueError(f"x1={x1} outside the polygon projection")
    return min(ys), max(ys)


def profile(poly: ConvexPolygon) -> ProfileWeight:
    """Chord-length function along the diameter, normalized to [0, 1].

    The polygon is first rotated so its diameter lies on the positive x-axis
    and rescaled to unit diameter; the returned piecewise-linear function is
    the length of the vertical section at each abscissa, vanishing at 0 and 1.
    """
    canon, _ = align_to_diameter(poly, unit=True)
    xs = np.sort(canon.vertices[:, 0])
    keep = np.concatenate([[True], np.diff(xs) > 1e-12])
    xs = xs[keep]
    xs[0], xs[-1] = 0.0, 1.0
    q = np.empty_like(xs)
    q[0] = q[-1] = 0.0
    for i, x in enumerate(xs[1:-1], start=1):
        lo, hi = _section_interval(canon, float(x))
        q[i] = hi - lo
    return ProfileWeight(xs, q, dim=2, concavity_tol=1e-9)


def section_moment(poly: ConvexPolygon, x1: float) -> SectionMoment:
    """Mean and centered second moment of the vertical section at x1.

    Planar sections are intervals of length p, so the moment is p^3/12 about
    the section mean exactly.
    """
    xs = poly.vertices[:, 0]
    if not (xs.min() < x1 < xs.max()):
        raise ValueError(f"x1={x1} not strictly inside the projection interval")
    lo, hi = _section_interval(poly, x1)
    p = hi - lo
    return SectionMoment(c=0.5 * (lo + hi), m2=p**3 / 12.0)


def make_triangle(alpha: float, l: float = 1.0) -> ConvexPolygon:
    """Isosceles triangle with aperture alpha at the apex and equal sides l.

    The base sits on the x-axis: vertices (-l sin(a/2), 0), (l sin(a/2), 0),
    (0, l cos(a/2)).
    """
    if not (0 < alpha < math.pi):
        raise ValueError(f"aperture must lie in (0, pi): {alpha}")
    if l <= 0:
        raise ValueError("side length must be positive")
    s, c = math.sin(alpha / 2), math.cos(alpha / 2)
    return ConvexPolygon(np.array([[-l * s, 0.0], [l * s, 0.0], [0.0, l * c]]))


def regular_polygon(n: int, radius: float = 1.0, center=(0.0, 0.0)) -> ConvexPolygon:
    t = np.linspace(0, 2 * math.pi, n, endpoint=False)
    return ConvexPolygon(np.stack([radius * np.cos(t) + center[0], radius * np.sin(t) + center[1]], axis=1))


# ---------------------------------------------------------------------------
# file format: "x y" per line with '#' comments, or a JSON array of pairs

def load_polygon(path) -> ConvexPolygon:
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("["):
        return ConvexPolygon(np.asarray(json.loads(text), dtype=np.float64))
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            x, y = line.split()
            rows.append((float(x), float(y)))
    return ConvexPolygon(np.asarray(rows))


def save_polygon(poly: ConvexPolygon, path, fmt: str = "txt") -> None:
    path = Path(path)
    if fmt == "json":
        body = ",\n".join(f"  [{x:.17g}, {y:.17g}]" for x, y in poly.vertices)
        path.write_text("[\n" + body + "\n]\n")
    elif fmt == "txt":
        lines = [f"{x:.17g} {y:.17g}" for x, y in poly.vertices]
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown polygon format {fmt!r}")
