"""Weighted 1-D Neumann eigenproblems -(p u')' = mu p u on (0, 1).

The weight is p = q^(d-1) for a concave piecewise-linear q >= 0, the
collapsed limit of convex bodies of unit diameter in dimension d.  The
module also provides the sharp diameter-normalized upper bounds mu*_{k,d}
in closed Bessel form, and the weights attaining them (tents for k = 1,
symmetric trapezoids for k >= 2 away from d = 3).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .solvers import EigenResult, smallest_eigenpairs
from .specfun import bessel_zero, gauss_legendre

__all__ = [
    "ProfileWeight",
    "EigenResult",
    "TrapezoidOptimum",
    "PeakOptimum",
    "sl_eigs",
    "kroger_bound",
    "maximizer_profile",
    "optimize_trapezoid",
    "optimize_peak",
    "strictness_check",
    "random_concave_profile",
]


@dataclass(frozen=True)
class ProfileWeight:
    """Piecewise-linear q = p^(1/(d-1)) on [0, 1]; the weight is p = q^(d-1).

    q must be concave and nonnegative, which makes p 1/(d-1)-concave by
    construction.
    """

    breakpoints: np.ndarray
    q_values: np.ndarray
    dim: int = 2
    concavity_tol: float = 1e-12

    def __post_init__(self):
        x = np.asarray(self.breakpoints, dtype=np.float64)
        q = np.asarray(self.q_values, dtype=np.float64)
        if x.shape != q.shape or x.ndim != 1 or len(x) < 2:
            raise ValueError("breakpoints and q_values must be matching 1-D arrays")
        if abs(x[0]) > 1e-12 or abs(x[-1] - 1.0) > 1e-12:
            raise ValueError("breakpoints must span [0, 1]")
        if np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(q < -1e-14) or not np.any(q > 0):
            raise ValueError("q must be nonnegative and not identically zero")
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")
        slopes = np.diff(q) / np.diff(x)
        scale = max(1.0, float(np.max(np.abs(q))))
        if np.any(np.diff(slopes) > self.concavity_tol * scale / np.min(np.diff(x))):
            raise ValueError("q is not concave")
        x = x.copy()
        x[0], x[-1] = 0.0, 1.0
        q = np.maximum(q, 0.0)
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "q_values", q)
        x.flags.writeable = False
        q.flags.writeable = False

    def q(self, x):
        return np.interp(x, self.breakpoints, self.q_values)

    def p(self, x):
        return self.q(x) ** (self.dim - 1)

    def reflected(self) -> "ProfileWeight":
        return ProfileWeight(
            1.0 - self.breakpoints[::-1], self.q_values[::-1].copy(), self.dim, self.concavity_tol
        )

    def scaled_p(self, c: float) -> "ProfileWeight":
        """Weight with p replaced by c*p (q scaled by c^(1/(d-1)))."""
        if c <= 0:
            raise ValueError("scale must be positive")
        return ProfileWeight(
            self.breakpoints.copy(),
            self.q_values * c ** (1.0 / (self.dim - 1)),
            self.dim,
            self.concavity_tol,
        )

    def to_json(self) -> dict:
        return {
            "d": int(self.dim),
            "breakpoints": [float(t) for t in self.breakpoints],
            "q": [float(t) for t in self.q_values],
        }

    @staticmethod
    def from_json(obj) -> "ProfileWeight":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        return ProfileWeight(np.asarray(obj["breakpoints"]), np.asarray(obj["q"]), int(obj["d"]))


def sl_eigs(weight: ProfileWeight, k: int, n_elems: int) -> EigenResult:
    """First k+1 eigenvalues of -(p u')' = mu p u with natural conditions.

    Conforming P1 Galerkin on a uniform mesh; element integrals of the
    polynomial weight p = q^(d-1) are evaluated exactly by Gauss-Legendre
    panels split at the breakpoints of q, so the degenerate endpoints
    (p(0) = p(1) = 0 for profile weights) cost no accuracy.  Computed
    eigenvalues are upper bounds of the true ones (Rayleigh-Ritz).

    Eigenvectors come back normalized by the weighted norm, int u^2 p = 1.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if n_elems < 8 * k:
        raise ValueError(f"n_elems={n_elems} too coarse for k={k}; need >= {8 * k}")
    d = weight.dim
    nodes = np.linspace(0.0, 1.0, n_elems + 1)
    cuts = np.union1d(nodes, weight.breakpoints)
    lo, hi = cuts[:-1], cuts[1:]
    keep = hi - lo > 1e-15
    lo, hi = lo[keep], hi[keep]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    elem = np.clip(np.searchsorted(nodes, mid) - 1, 0, n_elems - 1)

    rule = gauss_legendre(max(3, (d + 3) // 2 + 1))
    X = mid[:, None] + half[:, None] * rule.nodes[None, :]
    W = half[:, None] * rule.weights[None, :]
    p = weight.q(X) ** (d - 1)
    h = 1.0 / n_elems
    phi_r = (X - nodes[elem][:, None]) / h
    phi_l = 1.0 - phi_r

    wp = W * p
    m_ll = np.bincount(elem, (wp * phi_l * phi_l).sum(axis=1), minlength=n_elems)
    m_lr = np.bincount(elem, (wp * phi_l * phi_r).sum(axis=1), minlength=n_elems)
    m_rr = np.bincount(elem, (wp * phi_r * phi_r).sum(axis=1), minlength=n_elems)
    k_e = np.bincount(elem, wp.sum(axis=1), minlength=n_elems) / h**2

    main_m = np.zeros(n_elems + 1)
    main_m[:-1] += m_ll
    main_m[1:] += m_rr
    main_k = np.zeros(n_elems + 1)
    main_k[:-1] += k_e
    main_k[1:] += k_e

    M = sp.diags([m_lr, main_m, m_lr], [-1, 0, 1], format="csc")
    K = sp.diags([-k_e, main_k, -k_e], [-1, 0, 1], format="csc")
    return smallest_eigenpairs(K, M, k + 1, mesh_size=h)


def kroger_bound(k: int, d: int) -> float:
    """Sharp upper bound mu*_{k,d} for D^2 mu_k over convex bodies in R^d."""
    if not (1 <= k <= 20):
        raise ValueError(f"k out of supported range [1, 20]: {k}")
    if not (2 <= d <= 22):
        raise ValueError(f"d out of supported range [2, 22]: {d}")
    if d == 2:
        return (2.0 * bessel_zero(0, 1) + (k - 1) * math.pi) ** 2
    if d == 3:
        return ((k + 1) * math.pi) ** 2
    nu = (d - 2) / 2.0
    if k % 2 == 1:
        return 4.0 * bessel_zero(nu, (k + 1) // 2) ** 2
    return (bessel_zero(nu, k // 2) + bessel_zero(nu, (k + 2) // 2)) ** 2


def _trapezoid_weight(plateau: float, d: int) -> ProfileWeight:
    if plateau < 1e-12:
        return ProfileWeight(np.array([0.0, 0.5, 1.0]), np.array([0.0, 1.0, 0.0]), d)
    a = 0.5 * (1.0 - plateau)
    return ProfileWeight(
        np.array([0.0, a, 1.0 - a, 1.0]), np.array([0.0, 1.0, 1.0, 0.0]), d
    )


def _peak_weight(peak: float, d: int) -> ProfileWeight:
    return ProfileWeight(np.array([0.0, peak, 1.0]), np.array([0.0, 1.0, 0.0]), d)


def maximizer_profile(k: int, d: int, plateau: float | None = None, n_elems: int = 1024) -> ProfileWeight:
    """Weight maximizing mu_k among unit-diameter profiles.

    k = 1: the symmetric tent (any d).  d = 2, k >= 2: the symmetric
    isosceles trapezoid, with the plateau fraction taken from
    optimize_trapezoid when not supplied.  d >= 4, k >= 2: the extremal
    shape is a two-segment peak profile; for odd k the peak sits at 1/2
    (symmetric tent), while for even k the eigenfunction splits the phases
    j_{nu,k/2} and j_{nu,(k+2)/2} over the two sides and the peak sits at
    their ratio (the profile is not symmetric).  Passing plateau always
    builds the symmetric trapezoid with that plateau instead.  For d = 3
    and k >= 2 the maximizers form a non-unique multi-segment family and
    are not constructed here.
    """
    if k == 1:
        if plateau is not None:
            raise ValueError("the k=1 maximizer is the tent; plateau is not a parameter")
        return _peak_weight(0.5, d)
    if plateau is not None:
        if d == 3:
            raise ValueError("d=3, k>=2 maximizers are not trapezoids")
        if not (0 <= plateau < 1):
            raise ValueError(f"plateau fraction must lie in [0, 1): {plateau}")
        return _trapezoid_weight(plateau, d)
    if d == 2:
        return _trapezoid_weight(optimize_trapezoid(k, d, n_elems).plateau, d)
    if d == 3:
        raise ValueError(
            "d=3, k>=2 maximizers are a non-unique multi-segment family; "
            "use strictness_check for validation instead"
        )
    if k % 2 == 1:
        return _peak_weight(0.5, d)
    nu = (d - 2) / 2.0
    ja, jb = bessel_zero(nu, k // 2), bessel_zero(nu, (k + 2) // 2)
    return _peak_weight(ja / (ja + jb), d)


@dataclass(frozen=True)
class TrapezoidOptimum:
    plateau: float
    mu_k: float


def _golden_max(f, a: float, b: float, tol: float = 1e-7, max_iter: int = 40, n_scan: int = 48):
    """Coarse grid scan (eigenvalue branches cross, so the curve can be
    multimodal) followed by golden-section refinement in the best bracket."""
    grid = np.linspace(a, b, n_scan)
    vals = [f(t) for t in grid]
    i = int(np.argmax(vals))
    a = grid[max(0, i - 1)]
    b = grid[min(n_scan - 1, i + 1)]
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c1, c2 = b - inv_phi * (b - a), a + inv_phi * (b - a)
    f1, f2 = f(c1), f(c2)
    for _ in range(max_iter):
        if f1 < f2:
            a, c1, f1 = c1, c2, f2
            c2 = a + inv_phi * (b - a)
            f2 = f(c2)
        else:
            b, c2, f2 = c2, c1, f1
            c1 = b - inv_phi * (b - a)
            f1 = f(c1)
        if b - a < tol:
            break
    t = 0.5 * (a + b)
    return t, f(t)


def optimize_trapezoid(k: int, d: int, n_elems: int = 1024) -> TrapezoidOptimum:
    """Golden-section maximization of mu_k over symmetric trapezoid weights.

    Valid for d = 2 (any k >= 2) and for odd k when d >= 4, where the
    optimum degenerates to the tent.  For even k with d >= 4 the symmetric
    family tops out strictly below the sharp bound (the extremal profile is
    the asymmetric peak; see optimize_peak), so the request is rejected.
    """
    if k < 2:
        raise ValueError("trapezoid optimization applies to k >= 2")
    if d == 3:
        raise ValueError("d=3 maximizers are not trapezoids")
    if d >= 4 and k % 2 == 0:
        raise ValueError(
            "symmetric trapezoids do not attain the sharp bound for even k in "
            "dimension >= 4; use optimize_peak"
        )
    t, mu = _golden_max(
        lambda t: float(sl_eigs(_trapezoid_weight(t, d), k, n_elems).values[k]), 0.0, 0.999
    )
    return TrapezoidOptimum(plateau=t, mu_k=mu)


@dataclass(frozen=True)
class PeakOptimum:
    peak: float
    mu_k: float


def optimize_peak(k: int, d: int, n_elems: int = 1024) -> PeakOptimum:
    """Golden-section maximization of mu_k over two-segment peak profiles.

    The search runs over peak positions in (0, 1/2]; by reflection symmetry
    of the eigenvalues the mirrored peak attains the same value.  For d >= 4
    this family contains the maximizer for every k: the tent (peak 1/2) for
    odd k and the Bessel-phase ratio for even k.
    """
    if k < 2:
        raise ValueError("peak optimization applies to k >= 2")
    s, mu = _golden_max(
        lambda s: float(sl_eigs(_peak_weight(s, d), k, n_elems).values[k]), 0.03, 0.5
    )
    return PeakOptimum(peak=s, mu_k=mu)


def strictness_check(weight: ProfileWeight, k: int, n_elems: int, rel_tol: float = 1e-3) -> bool:
    """True iff the computed mu_k stays below mu*_{k,d} plus tolerance.

    Galerkin eigenvalues overestimate, so a pass certifies the bound up to
    the stated discretization allowance; the tolerance also admits the
    equality case at the maximizing weight.
    """
    mu = float(sl_eigs(weight, k, n_elems).values[k])
    bound = kroger_bound(k, weight.dim)
    return mu <= bound * (1.0 + rel_tol)


def random_concave_profile(rng: np.random.Generator, dim: int = 2, max_breaks: int = 12) -> ProfileWeight:
    """Random concave nonnegative q on [0, 1] (for falsification sweeps)."""
    m = int(rng.integers(2, max_breaks))
    x = np.concatenate([[0.0], np.sort(rng.uniform(0.05, 0.95, m)), [1.0]])
    x = np.unique(x)
    slopes = np.sort(rng.normal(0.0, 2.0, len(x) - 1))[::-1]
    q0 = rng.uniform(0.0, 1.0)
    q = np.concatenate([[q0], q0 + np.cumsum(slopes * np.diff(x))])
    q += rng.uniform(0.0, 1.0)
    low = q.min()
    if low < 0:
        q -= low
    if q.max() <= 0:
        q += 1.0
    return ProfileWeight(x, q, dim)
