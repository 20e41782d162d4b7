"""Dense complex linear algebra with explicit tolerance semantics.

Subspaces are carried as orthonormal frames. Equality of subspaces is always
judged through their orthogonal projectors, never by comparing frames.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, InvalidMatrix, NotHermitian, NotPSD

ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class Tolerance:
    """Rank threshold: a singular value s counts as zero iff
    ``s <= max(rel * scale, abs_floor)``."""

    rel: float = 1e-10
    abs_floor: float = 1e-13

    def __post_init__(self):
        if not (self.rel > 0 and self.abs_floor > 0):
            raise ValueError("tolerance components must be positive")

    def threshold(self, scale: float) -> float:
        return max(self.rel * scale, self.abs_floor)

    def scaled(self, factor: float) -> "Tolerance":
        return Tolerance(self.rel * factor, self.abs_floor * factor)


DEFAULT_TOL = Tolerance()


def as_matrix(M, square: bool = False) -> np.ndarray:
    """Coerce to a 2-D complex array, rejecting NaN/Inf."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2:
        raise InvalidMatrix(f"expected a 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidMatrix("matrix has non-finite entries")
    if square and A.shape[0] != A.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {A.shape}")
    return A


def opnorm(M) -> float:
    """Spectral norm; 0 for empty matrices."""
    A = np.asarray(M)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def fix_phases(frame: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    F = np.array(frame, dtype=complex)
    if F.size == 0:
        return F
    idx = np.argmax(np.abs(F), axis=0)
    pivots = F[idx, np.arange(F.shape[1])]
    return F * (np.abs(pivots) / pivots)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Closed subspace of C^d given by a d x k orthonormal frame."""

    frame: np.ndarray

    def __post_init__(self):
        F = as_matrix(self.frame)
        k = F.shape[1]
        if k > F.shape[0]:
            raise InvalidMatrix("frame has more columns than rows")
        if k and opnorm(F.conj().T @ F - np.eye(k)) > ORTHO_TOL:
            raise InvalidMatrix("frame columns are not orthonormal")
        F.setflags(write=False)
        object.__setattr__(self, "frame", F)

    @property
    def ambient_dim(self) -> int:
        return self.frame.shape[0]

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.conj().T

    @classmethod
    def full(cls, d: int) -> "Subspace":
        return cls(np.eye(d, dtype=complex))

    @classmethod
    def zero(cls, d: int) -> "Subspace":
        return cls(np.zeros((d, 0), dtype=complex))

    @classmethod
    def span(cls, vectors, tol: Tolerance = DEFAULT_TOL) -> "Subspace":
        """Orthonormal basis of the column span of ``vectors``."""
        V = as_matrix(vectors)
        if V.shape[1] == 0:
            return cls.zero(V.shape[0])
        U, s, _ = np.linalg.svd(V, full_matrices=False)
        rank = int(np.sum(s > tol.threshold(s[0])))
        return cls(U[:, :rank])

    @classmethod
    def coordinates(cls, d: int, indices) -> "Subspace":
        return cls(np.eye(d, dtype=complex)[:, list(indices)])

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


def _check_same_ambient(S1: Subspace, S2: Subspace):
    if S1.ambient_dim != S2.ambient_dim:
        raise DimMismatch(f"ambient dims differ: {S1.ambient_dim} vs {S2.ambient_dim}")


def null_space(M, tol: Tolerance = DEFAULT_TOL, scale: float | None = None) -> Subspace:
    """Orthonormal basis of ``{x : M x = 0}`` via SVD.

    ``scale`` defaults to the largest singular value of ``M``; callers that
    know the natural size of the problem (e.g. the norm of the operators a
    residual was built from) should pass it, so that a matrix made entirely
    of rounding noise is not mistaken for a full-rank one.
    """
    A = as_matrix(M)
    m, n = A.shape
    if n == 0:
        return Subspace.zero(0)
    if m == 0:
        return Subspace.full(n)
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    if scale is None:
        scale = s[0]
    rank = int(np.sum(s > tol.threshold(scale)))
    return Subspace(Vh[rank:].conj().T)


def psd_sqrt(H, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Unique positive square root of a Hermitian PSD matrix.

    Eigenvalues in ``[-max(rel*|H|, abs_floor), 0)`` are clamped to zero;
    anything more negative raises ``NotPSD``.
    """
    A = as_matrix(H, square=True)
    if A.size == 0:
        return A.copy()
    norm = opnorm(A)
    if opnorm(A - A.conj().T) > tol.rel * max(norm, 1.0):
        raise NotHermitian("matrix is not Hermitian")
    w, V = np.linalg.eigh((A + A.conj().T) / 2)
    if w[0] < -tol.threshold(norm):
        raise NotPSD(f"eigenvalue {w[0]:.3e} is materially negative")
    w = np.clip(w, 0.0, None)
    R = (V * np.sqrt(w)) @ V.conj().T
    return (R + R.conj().T) / 2


def intersect(S1: Subspace, S2: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    _check_same_ambient(S1, S2)
    d = S1.ambient_dim
    eye = np.eye(d)
    stacked = np.vstack([eye - S1.projector(), eye - S2.projector()])
    return null_space(stacked, tol, scale=1.0)


def complement(S: Subspace) -> Subspace:
    d, k = S.ambient_dim, S.dim
    if k == 0:
        return Subspace.full(d)
    U, _, _ = np.linalg.svd(S.frame, full_matrices=True)
    return Subspace(U[:, k:])


def direct_sum(*subspaces: Subspace) -> Subspace:
    """Span of mutually orthogonal subspaces (frames are concatenated)."""
    d = subspaces[0].ambient_dim
    for S in subspaces:
        _check_same_ambient(subspaces[0], S)
    return Subspace(np.hstack([S.frame for S in subspaces]) if subspaces else np.zeros((d, 0)))


def principal_angle_distance(S1: Subspace, S2: Subspace) -> float:
    """``||P1 - P2||_2``; exactly 1.0 when the dimensions differ."""
    _check_same_ambient(S1, S2)
    if S1.dim != S2.dim:
        return 1.0
    if S1.dim == 0:
        return 0.0
    return opnorm(S1.projector() - S2.projector())


def containment_gap(inner: Subspace, outer: Subspace) -> float:
    """``||(I - P_outer) B_inner||``: zero iff ``inner`` sits inside ``outer``."""
    _check_same_ambient(inner, outer)
    if inner.dim == 0:
        return 0.0
    B = inner.frame
    return opnorm(B - outer.frame @ (outer.frame.conj().T @ B))


def compress(T, S: Subspace) -> np.ndarray:
    A = as_matrix(T, square=True)
    if A.shape[0] != S.ambient_dim:
        raise DimMismatch(f"operator side {A.shape[0]} vs ambient dim {S.ambient_dim}")
    B = S.frame
    return B.conj().T @ A @ B


def reduction_residual(T, S: Subspace) -> float:
    """``max(||(I-P) T P||, ||(I-P) T* P||)``; zero iff S reduces T."""
    A = as_matrix(T, square=True)
    if A.shape[0] != S.ambient_dim:
        raise DimMismatch(f"operator side {A.shape[0]} vs ambient dim {S.ambient_dim}")
    if S.dim == 0 or S.dim == S.ambient_dim:
        return 0.0
    B = S.frame
    P = S.projector()
    out = []
    for X in (A, A.conj().T):
        XB = X @ B
        out.append(opnorm(XB - P @ XB))
    return max(out)
