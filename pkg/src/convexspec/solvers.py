"""Shared generalized symmetric eigenvalue extraction.

Both the 1-D weighted problems and the planar FEM lead to pencils (K, M)
with K positive semidefinite (constants in the kernel) and M positive
definite.  The smallest eigenpairs are pulled out by shift-invert Lanczos
with a small negative shift so the zero mode is kept; a dense solve is the
fallback for moderate problem sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = ["EigenResult", "smallest_eigenpairs"]

DENSE_FALLBACK_MAX = 3000


@dataclass(frozen=True)
class EigenResult:
    """Ordered eigenvalues with discrete eigenvectors (M-orthonormal)."""

    values: np.ndarray
    vectors: np.ndarray
    mesh_size: float
    residuals: np.ndarray

    @property
    def n_dof(self) -> int:
        return self.vectors.shape[0]

    def to_json(self) -> dict:
        return {
            "mu": [float(v) for v in self.values],
            "h": self.mesh_size,
            "n_dof": self.n_dof,
            "residuals": [float(r) for r in self.residuals],
        }


def _dense(K, M, nev):
    Kd = K.toarray() if sp.issparse(K) else np.asarray(K)
    Md = M.toarray() if sp.issparse(M) else np.asarray(M)
    vals, vecs = scipy.linalg.eigh(Kd, Md, subset_by_index=[0, nev - 1])
    return vals, vecs


def smallest_eigenpairs(K, M, nev: int, mesh_size: float) -> EigenResult:
    """First nev eigenpairs of K x = mu M x, ascending, M-orthonormal."""
    n = K.shape[0]
    if nev > n:
        raise ValueError(f"requested {nev} eigenpairs from a pencil of size {n}")
    md = M.diagonal()
    if not np.all(np.isfinite(md)) or np.any(md <= 0):
        raise RuntimeError("mass matrix is rank deficient (weight vanishes on elements)")
    scale = float(K.diagonal().sum() / md.sum())
    sigma = -1e-6 * scale
    vals = vecs = None
    if nev < n - 1:
        try:
            vals, vecs = spla.eigsh(K, k=nev, M=M, sigma=sigma, which="LM")
        except (spla.ArpackError, RuntimeError):
            vals = None
    if vals is None:
        if n > DENSE_FALLBACK_MAX:
            raise RuntimeError(
                f"shift-invert Lanczos failed on a pencil of size {n} "
                f"(> {DENSE_FALLBACK_MAX}, dense fallback not attempted)"
            )
        vals, vecs = _dense(K, M, nev)
    order = np.argsort(vals)
    vals = np.asarray(vals)[order]
    vecs = np.asarray(vecs)[:, order]
    res = np.linalg.norm(K @ vecs - M @ vecs * vals[None, :], axis=0)
    return EigenResult(vals, vecs, mesh_size, res)
