"""convexspec: spectral bounds for convex planar domains and their collapsed limits.

Modules:
  specfun         Bessel J, Bessel zeros, Gauss-Legendre quadrature
  geometry        convex polygons, diameter/width, John ellipse, profiles
  sturm           weighted 1-D eigenproblems and the sharp bounds mu*_{k,d}
  fem2d           planar P1 Neumann eigensolver (isotropic and thin paths)
  explicit_bound  the explicit flatness constant for symmetric domains
  harness         experiment campaigns and the command-line interface
"""

__version__ = "0.1.0"

from .geometry import ConvexPolygon, diameter, flatness, john_ellipse, make_triangle, profile
from .solvers import EigenResult
from .specfun import bessel_j, bessel_zero, gauss_legendre, integrate
from .sturm import ProfileWeight, kroger_bound, maximizer_profile, sl_eigs

__all__ = [
    "__version__",
    "ConvexPolygon",
    "EigenResult",
    "ProfileWeight",
    "bessel_j",
    "bessel_zero",
    "diameter",
    "flatness",
    "gauss_legendre",
    "integrate",
    "john_ellipse",
    "kroger_bound",
    "make_triangle",
    "maximizer_profile",
    "profile",
    "sl_eigs",
]
