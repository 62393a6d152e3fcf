"""Tolerance-aware dense linear algebra over real and complex scalars.

Rank decisions, null spaces, subspace arithmetic, affine solution sets,
eigen-decompositions and right inverses, all sharing one SVD-based rank
convention so that downstream dimension tests are consistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, InvalidMatrix, NotRightInvertible

DEFAULT_RTOL = float(np.finfo(float).eps)

# Rank decisions on matrices assembled from previously computed bases or
# near-singular solves must sit above the accumulated rounding noise
# (~1e-14 relative), not at machine eps; this is the shared default for
# such derived-data decisions.
DERIVED_RTOL = 1e-9


def _as_array(m, name="matrix"):
    """Validate and normalize a matrix argument to a 2-D float/complex array."""
    try:
        a = np.asarray(m)
        if a.dtype == object:
            raise InvalidMatrix(f"{name} is not a numeric grid")
        if not np.iscomplexobj(a):
            a = a.astype(float)
    except (TypeError, ValueError) as exc:
        raise InvalidMatrix(f"{name} is not a numeric grid: {exc}") from exc
    a = np.atleast_2d(a)
    if a.ndim != 2:
        raise InvalidMatrix(f"{name} is not two-dimensional")
    if a.size == 0:
        raise InvalidMatrix(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix(f"{name} has non-finite entries")
    return a


def _resolve_rtol(rtol):
    return DEFAULT_RTOL if rtol is None else float(rtol)


@dataclass(frozen=True)
class SubspaceBasis:
    """A subspace of R^n or C^n carried by an orthonormal column basis."""

    ambient_dim: int
    basis: np.ndarray
    rtol: float = DEFAULT_RTOL

    def __post_init__(self):
        b = np.asarray(self.basis)
        if b.ndim != 2:
            b = b.reshape(self.ambient_dim, -1)
        if b.shape[0] != self.ambient_dim:
            raise DimensionMismatch(
                f"basis has {b.shape[0]} rows, ambient dimension is {self.ambient_dim}"
            )
        if b.shape[1] > self.ambient_dim:
            raise DimensionMismatch("basis has more columns than the ambient dimension")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def is_complex(self) -> bool:
        return bool(np.iscomplexobj(self.basis))

    def conjugate(self) -> "SubspaceBasis":
        return SubspaceBasis(self.ambient_dim, np.conj(self.basis), self.rtol)


@dataclass(frozen=True)
class AffineSet:
    """A nonempty affine solution set: particular point plus direction space."""

    particular: np.ndarray
    directions: SubspaceBasis

    @property
    def ambient_dim(self) -> int:
        return self.directions.ambient_dim

    def sample(self, coefficients) -> np.ndarray:
        """A point of the set: particular + directions @ coefficients."""
        c = np.asarray(coefficients)
        if self.directions.dim == 0:
            return self.particular.copy()
        return self.particular + self.directions.basis @ c


@dataclass(frozen=True)
class Infeasible:
    """Verdict value for an affine system with no solution."""

    residual: float


def rank_of(M, rtol=None) -> int:
    """Numerical rank: singular values above rtol * sigma_max * max(rows, cols)."""
    a = _as_array(M)
    rtol = _resolve_rtol(rtol)
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0] * max(a.shape)))


def null_space(M, rtol=None) -> SubspaceBasis:
    """Orthonormal basis of the kernel of M at the rank_of tolerance."""
    a = _as_array(M)
    rtol = _resolve_rtol(rtol)
    _, s, vh = np.linalg.svd(a)
    if s.size and s[0] > 0.0:
        rank = int(np.sum(s > rtol * s[0] * max(a.shape)))
    else:
        rank = 0
    basis = vh[rank:].conj().T
    return SubspaceBasis(a.shape[1], basis, rtol)


def orthonormalize(columns, ambient_dim=None, rtol=None) -> SubspaceBasis:
    """Orthonormal basis of the column space of the given stacked columns."""
    rtol = _resolve_rtol(rtol)
    a = np.asarray(columns)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.shape[1] == 0 or a.size == 0:
        if ambient_dim is None:
            ambient_dim = a.shape[0] if a.ndim == 2 else 0
        return SubspaceBasis(ambient_dim, np.zeros((ambient_dim, 0)), rtol)
    if ambient_dim is not None and a.shape[0] != ambient_dim:
        raise DimensionMismatch(
            f"columns have {a.shape[0]} rows, ambient dimension is {ambient_dim}"
        )
    a = _as_array(a, "columns")
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size and s[0] > 0.0:
        rank = int(np.sum(s > rtol * s[0] * max(a.shape)))
    else:
        rank = 0
    return SubspaceBasis(a.shape[0], u[:, :rank], rtol)


def subspace_sum_dim(bases, rtol=None) -> int:
    """Dimension of the sum of subspaces, as the rank of stacked bases."""
    bs = list(bases)
    if not bs:
        return 0
    ambient = bs[0].ambient_dim
    for b in bs:
        if b.ambient_dim != ambient:
            raise DimensionMismatch(
                f"mixed ambient dimensions {b.ambient_dim} and {ambient}"
            )
    cols = [b.basis for b in bs if b.dim > 0]
    if not cols:
        return 0
    return rank_of(np.hstack(cols), rtol)


def affine_solution_set(M, b, rtol=None):
    """Solve M x = b: least-norm particular plus kernel, or Infeasible."""
    a = _as_array(M)
    rtol = _resolve_rtol(rtol)
    bv = np.asarray(b).reshape(-1)
    if bv.shape[0] != a.shape[0]:
        raise DimensionMismatch(
            f"right side has {bv.shape[0]} entries, matrix has {a.shape[0]} rows"
        )
    if not np.all(np.isfinite(bv)):
        raise InvalidMatrix("right side has non-finite entries")
    augmented = np.hstack([a, bv.reshape(-1, 1)])
    if rank_of(augmented, rtol) > rank_of(a, rtol):
        scale = np.linalg.norm(a, 2)
        x = np.linalg.lstsq(a, bv, rcond=None)[0]
        residual = float(np.linalg.norm(a @ x - bv))
        return Infeasible(residual / (1.0 + scale))
    particular = np.linalg.lstsq(a, bv, rcond=None)[0]
    return AffineSet(particular, null_space(a, rtol))


def eig_decomp(M):
    """Eigenpairs sorted by (real, imaginary) part; unit-norm eigenvectors."""
    a = _as_array(M)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix is {a.shape[0]}x{a.shape[1]}, not square")
    w, v = np.linalg.eig(a)
    order = np.lexsort((w.imag, w.real))
    pairs = []
    for idx in order:
        vec = v[:, idx]
        vec = vec / np.linalg.norm(vec)
        pairs.append((complex(w[idx]), vec))
    return pairs


def right_inverse(M, rtol=None) -> np.ndarray:
    """Moore-Penrose right inverse of a full-row-rank matrix."""
    a = _as_array(M)
    if rank_of(a, rtol) < a.shape[0]:
        raise NotRightInvertible(
            f"matrix of shape {a.shape} is row-rank deficient"
        )
    return np.linalg.pinv(a)


def principal_angles(a: SubspaceBasis, b: SubspaceBasis) -> np.ndarray:
    """Principal angles (ascending, radians) between two subspaces.

    Computed with the sine-based recursion so that angles far below the
    square root of machine precision are still resolved; the plain
    arccos-of-cosines formula bottoms out near 2e-8.
    """
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch("subspaces live in different ambient spaces")
    if a.dim == 0 or b.dim == 0:
        return np.zeros(0)
    return np.sort(scipy.linalg.subspace_angles(a.basis, b.basis))
