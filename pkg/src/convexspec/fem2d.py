"""Neumann-Laplacian eigenvalues of convex polygons by planar P1 elements.

Meshing is Delaunay over boundary points plus a staggered interior grid with
Laplacian smoothing; every triangle of the Delaunay triangulation lies inside
the (convex) polygon, so the mesh covers it exactly.  Thin domains are solved
on an affinely rescaled unit-aspect copy with anisotropic coefficients, which
keeps element quality independent of the aspect ratio.  All solves are
conforming Galerkin, so computed eigenvalues bound the true ones from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial import Delaunay

from .geometry import ConvexPolygon, align_to_diameter
from .solvers import EigenResult, smallest_eigenpairs

__all__ = [
    "TriMesh",
    "mesh_polygon",
    "refine",
    "assemble",
    "neumann_eigs",
    "neumann_eigs_thin",
    "neumann_eigs_extrapolated",
    "THIN_ASPECT",
]

NODE_CAP = 500_000
THIN_ASPECT = 0.2


@dataclass(frozen=True)
class TriMesh:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_flags: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def edge_lengths(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        out = []
        for i in range(3):
            out.append(np.linalg.norm(p[:, (i + 1) % 3] - p[:, i], axis=1))
        return np.stack(out, axis=1)

    def min_angle(self) -> float:
        ls = np.sort(self.edge_lengths(), axis=1)
        a, b, c = ls[:, 0], ls[:, 1], ls[:, 2]
        cosv = np.clip((b**2 + c**2 - a**2) / (2 * b * c), -1.0, 1.0)
        return float(np.degrees(np.min(np.arccos(cosv))))


def _boundary_points(poly: ConvexPolygon, h: float) -> np.ndarray:
    pts = []
    v = poly.vertices
    for p, q in zip(v, np.roll(v, -1, axis=0)):
        n_seg = max(1, int(math.ceil(np.linalg.norm(q - p) / h)))
        t = np.arange(n_seg) / n_seg
        pts.append(p[None, :] + t[:, None] * (q - p)[None, :])
    return np.concatenate(pts, axis=0)


def _interior_points(poly: ConvexPolygon, h: float) -> np.ndarray:
    lo = poly.vertices.min(axis=0)
    hi = poly.vertices.max(axis=0)
    dy = h * math.sqrt(3.0) / 2.0
    rows = np.arange(lo[1] + 0.5 * dy, hi[1], dy)
    pts = []
    for j, y in enumerate(rows):
        xs = np.arange(lo[0] + (0.25 + 0.5 * (j % 2)) * h, hi[0], h)
        pts.append(np.stack([xs, np.full_like(xs, y)], axis=1))
    if not pts:
        return np.empty((0, 2))
    pts = np.concatenate(pts, axis=0)
    keep = poly.signed_distance(pts) <= -0.5 * h
    return pts[keep]


def _orient_ccw(points, tri):
    p = points[tri]
    areas = 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    flip = areas < 0
    tri[flip] = tri[flip][:, ::-1]
    return tri, np.abs(areas)


def _triangulate(points: np.ndarray) -> np.ndarray:
    """Delaunay triangulation with degenerate boundary slivers repaired.

    Collinear runs of boundary points (straight polygon edges cut at spacing
    h) make qhull emit zero-area hull simplices; each one is removed and the
    triangle across its long edge is split at the middle vertex, which keeps
    the triangulation conforming.
    """
    tri, areas = _orient_ccw(points, Delaunay(points).simplices.copy())
    for _ in range(8):
        med = np.median(areas)
        bad = np.nonzero(areas <= 1e-9 * med)[0]
        if len(bad) == 0:
            break
        edge_map: dict = {}
        for t, (a, b, c) in enumerate(tri):
            for u, v in ((a, b), (b, c), (c, a)):
                edge_map.setdefault((min(u, v), max(u, v)), []).append(t)
        keep = np.ones(len(tri), dtype=bool)
        added = []
        for t in bad:
            if not keep[t]:
                continue
            a, b, c = tri[t]
            l2 = [
                np.sum((points[b] - points[c]) ** 2),
                np.sum((points[c] - points[a]) ** 2),
                np.sum((points[a] - points[b]) ** 2),
            ]
            w, u, v = np.roll([a, b, c], -int(np.argmax(l2)))
            keep[t] = False
            nb = [s for s in edge_map[(min(u, v), max(u, v))] if s != t and keep[s]]
            if len(nb) == 1:
                s = nb[0]
                d = next(x for x in tri[s] if x != u and x != v)
                keep[s] = False
                added += [(u, w, d), (w, v, d)]
        tri = np.concatenate([tri[keep], np.asarray(added, dtype=tri.dtype).reshape(-1, 3)])
        tri, areas = _orient_ccw(points, tri)
    return tri


def mesh_polygon(poly: ConvexPolygon, h_target: float) -> TriMesh:
    """Delaunay mesh of a convex polygon with target edge length h_target.

    Five Laplacian smoothing passes (boundary fixed, interior to neighbor
    centroids, re-triangulated each pass) even out the triangle shapes; on
    domains without very sharp corners the minimum angle lands above 20
    degrees.
    """
    diam = math.hypot(*(poly.vertices.max(axis=0) - poly.vertices.min(axis=0)))
    if h_target > diam / 4:
        raise ValueError(f"h_target={h_target} too coarse for a domain of size {diam:.3g}")
    bpts = _boundary_points(poly, h_target)
    ipts = _interior_points(poly, h_target)
    if len(bpts) + len(ipts) > NODE_CAP:
        raise RuntimeError(f"node budget exceeded: {len(bpts) + len(ipts)} > {NODE_CAP}")
    points = np.concatenate([bpts, ipts], axis=0)
    n_fixed = len(bpts)
    tri = _triangulate(points)
    for _ in range(5):
        if len(points) == n_fixed:
            break
        neigh_sum = np.zeros_like(points)
        neigh_cnt = np.zeros(len(points))
        for i in range(3):
            a = tri[:, i]
            for j in range(3):
                if i != j:
                    np.add.at(neigh_sum, a, points[tri[:, j]])
                    np.add.at(neigh_cnt, a, 1.0)
        points[n_fixed:] = neigh_sum[n_fixed:] / neigh_cnt[n_fixed:, None]
        tri = _triangulate(points)
    used = np.unique(tri)
    if len(used) != len(points):
        remap = -np.ones(len(points), dtype=tri.dtype)
        remap[used] = np.arange(len(used))
        points = points[used]
        tri = remap[tri]
    flags = np.abs(poly.signed_distance(points)) <= 1e-12 * max(1.0, diam)
    mesh = TriMesh(points, tri, flags)
    if abs(mesh.areas().sum() - poly.area) > 1e-10 * poly.area:
        raise RuntimeError("triangulation does not cover the polygon")
    return mesh


def column_mesh(poly: ConvexPolygon, h_target: float) -> TriMesh:
    """Tensor-structured mesh over vertical columns of an aligned polygon.

    The polygon must have its diameter on [0, D] x {0}.  Nodes sit on
    vertical columns (one per grid abscissa and per vertex abscissa), each
    graded between the lower and upper boundary; cells are the split quads
    between adjacent columns.  Every triangle has its vertices on exactly
    two columns, so interpolating a function of x alone produces no spurious
    y-gradient; this is what keeps strongly anisotropic forms (the thin-
    domain transform) at the full h^2 rate.
    """
    from .geometry import _section_interval

    v = poly.vertices
    xmin, xmax = float(v[:, 0].min()), float(v[:, 0].max())
    width = xmax - xmin
    xs = np.union1d(np.linspace(xmin, xmax, max(4, int(math.ceil(width / h_target)) + 1)), v[:, 0])
    keep = np.concatenate([[True], np.diff(xs) > 1e-12 * width])
    xs = xs[keep]
    xs[0], xs[-1] = xmin, xmax
    lo = np.empty_like(xs)
    hi = np.empty_like(xs)
    for i, x in enumerate(xs):
        lo[i], hi[i] = _section_interval(poly, float(x))
    heights = hi - lo
    hmax = float(heights.max())
    n_y = max(1, int(round(hmax / h_target)))
    if len(xs) * (n_y + 1) > NODE_CAP:
        raise RuntimeError(f"node budget exceeded: {len(xs) * (n_y + 1)} > {NODE_CAP}")

    points = []
    col_ids = []
    degen = heights <= 1e-12 * max(hmax, 1.0)
    for i, x in enumerate(xs):
        if degen[i]:
            col_ids.append([len(points)])
            points.append((x, lo[i]))
        else:
            ids = list(range(len(points), len(points) + n_y + 1))
            col_ids.append(ids)
            for j in range(n_y + 1):
                points.append((x, lo[i] + heights[i] * j / n_y))
    points = np.asarray(points)

    tris = []
    for i in range(len(xs) - 1):
        left, right = col_ids[i], col_ids[i + 1]
        if len(left) == 1 and len(right) == 1:
            raise RuntimeError("degenerate strip: two adjacent zero-height columns")
        if len(left) == 1:
            tris += [(left[0], right[j], right[j + 1]) for j in range(n_y)]
        elif len(right) == 1:
            tris += [(right[0], left[j + 1], left[j]) for j in range(n_y)]
        else:
            for j in range(n_y):
                tris.append((left[j], right[j], right[j + 1]))
                tris.append((left[j], right[j + 1], left[j + 1]))
    tri, _ = _orient_ccw(points, np.asarray(tris))
    diam = math.hypot(*(v.max(axis=0) - v.min(axis=0)))
    flags = np.abs(poly.signed_distance(points)) <= 1e-12 * max(1.0, diam)
    mesh = TriMesh(points, tri, flags)
    if abs(mesh.areas().sum() - poly.area) > 1e-10 * poly.area:
        raise RuntimeError("column mesh does not cover the polygon")
    return mesh


def refine(mesh: TriMesh, poly: ConvexPolygon) -> TriMesh:
    """Regular 4-split of every triangle (nested spaces, edge midpoints)."""
    tri = mesh.triangles
    edges = {}
    nodes = [mesh.nodes]
    next_id = len(mesh.nodes)

    def midpoint(i, j):
        nonlocal next_id
        key = (min(i, j), max(i, j))
        if key not in edges:
            edges[key] = next_id
            next_id += 1
            nodes.append(0.5 * (mesh.nodes[i] + mesh.nodes[j])[None, :])
        return edges[key]

    new_tri = []
    for a, b, c in tri:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        new_tri += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    pts = np.concatenate(nodes, axis=0)
    diam = math.hypot(*(poly.vertices.max(axis=0) - poly.vertices.min(axis=0)))
    flags = np.abs(poly.signed_distance(pts)) <= 1e-12 * max(1.0, diam)
    return TriMesh(pts, np.asarray(new_tri), flags)


def assemble(mesh: TriMesh, anisotropy=(1.0, 1.0)):
    """P1 stiffness and consistent mass matrices (sparse CSR, symmetric).

    The stiffness discretizes sx * dx(u) dx(v) + sy * dy(u) dy(v); with
    anisotropy (1, 1) it is the plain Laplacian.  Constants lie in its
    kernel, so row sums vanish.
    """
    sx, sy = anisotropy
    if sx <= 0 or sy <= 0:
        raise ValueError("anisotropy factors must be positive")
    p = mesh.nodes[mesh.triangles]
    x, y = p[:, :, 0], p[:, :, 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    hscale = np.sqrt(np.median(area))
    if np.any(area < 1e-14 * hscale**2):
        raise RuntimeError("degenerate triangle encountered during assembly")
    bx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1) / (2 * area[:, None])
    by = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1) / (2 * area[:, None])
    ke = area[:, None, None] * (
        sx * bx[:, :, None] * bx[:, None, :] + sy * by[:, :, None] * by[:, None, :]
    )
    me = (area[:, None, None] / 12.0) * (np.ones((3, 3)) + np.eye(3))[None, :, :]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_nodes
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K = 0.5 * (K + K.T)
    M = 0.5 * (M + M.T)
    return K, M


def neumann_eigs(poly: ConvexPolygon, k: int, h_target: float) -> EigenResult:
    """First k+1 Neumann eigenvalues (mu_0 = 0 included) of a convex polygon."""
    mesh = mesh_polygon(poly, h_target)
    K, M = assemble(mesh)
    return smallest_eigenpairs(K, M, k + 1, mesh_size=h_target)


def _thin_setup(poly: ConvexPolygon):
    canon, D = align_to_diameter(poly)
    ys = canon.vertices[:, 1]
    w = float(ys.max() - ys.min())
    return canon, D, w


def neumann_eigs_thin(poly: ConvexPolygon, k: int, h_target: float) -> EigenResult:
    """Neumann eigenvalues of a thin polygon via the unit-aspect transform.

    The polygon (diameter D, orthogonal width w, aspect w/D below 0.2) is
    stretched to unit aspect and the quadratic form picks up the anisotropy
    (1, (D/w)^2); eigenvalues are those of the original domain, and element
    quality no longer degrades with the aspect ratio.
    """
    canon, D, w = _thin_setup(poly)
    if w / D >= THIN_ASPECT:
        raise ValueError(f"aspect {w / D:.3f} >= {THIN_ASPECT}; use neumann_eigs")
    stretched = ConvexPolygon(canon.vertices * np.array([1.0, D / w]))
    mesh = column_mesh(stretched, h_target)
    K, M = assemble(mesh, anisotropy=(1.0, (D / w) ** 2))
    return smallest_eigenpairs(K, M, k + 1, mesh_size=h_target)


def neumann_eigs_extrapolated(poly: ConvexPolygon, k: int, h_target: float, thin: bool | None = None):
    """Richardson-extrapolated eigenvalues from one nested refinement.

    Solves on a mesh and its regular 4-split; P1 eigenvalues converge as
    h^2 on nested meshes, so (4 mu_fine - mu_coarse)/3 cancels the leading
    error.  Returns (extrapolated values, fine-level EigenResult); the fine
    values keep the conforming upper-bound property, the extrapolated ones
    trade it for accuracy.
    """
    if thin is None:
        canon, D, w = _thin_setup(poly)
        thin = w / D < THIN_ASPECT
    if thin:
        canon, D, w = _thin_setup(poly)
        domain = ConvexPolygon(canon.vertices * np.array([1.0, D / w]))
        aniso = (1.0, (D / w) ** 2)
        mesh = column_mesh(domain, h_target)
    else:
        domain = poly
        aniso = (1.0, 1.0)
        mesh = mesh_polygon(domain, h_target)
    K, M = assemble(mesh, aniso)
    coarse = smallest_eigenpairs(K, M, k + 1, mesh_size=h_target)
    fine_mesh = refine(mesh, domain)
    K, M = assemble(fine_mesh, aniso)
    fine = smallest_eigenpairs(K, M, k + 1, mesh_size=h_target / 2)
    extrap = (4.0 * fine.values - coarse.values) / 3.0
    return extrap, fine
