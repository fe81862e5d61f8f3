"""Realified Hilbert spaces and a numerically robust calculus of closed real subspaces.

Every subspace is stored as an orthonormal frame (columns), so rank decisions are
explicit and projectors are derived on demand.  Complex n-dimensional spaces are
realified with the layout ``x = [Re(u); Im(u)]`` in R^{2n}; the canonical complex
structure is then the block matrix ``[[0, -I], [I, 0]]`` (multiplication by i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

TOL_RANK = 1e-10
TOL_EQ = 1e-8
TOL_ANGLE = 1e-8


class SubspaceError(ValueError):
    """Raised on dimension mismatches, containment violations or singular operators."""


def _as_columns(vectors) -> np.ndarray:
    """Coerce a list of 1-d vectors (or a 2-d column matrix) to a 2-d float array."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return np.asarray(vectors, dtype=float)
    vectors = [np.asarray(v, dtype=float).ravel() for v in vectors]
    if not vectors:
        raise SubspaceError("cannot infer ambient dimension from an empty list; "
                            "use RealSubspace.zero(dim) instead")
    dims = {v.shape[0] for v in vectors}
    if len(dims) != 1:
        raise SubspaceError(f"vectors live in different ambient dimensions: {sorted(dims)}")
    return np.column_stack(vectors)


@dataclass(frozen=True)
class RealSubspace:
    """A closed real subspace, stored as an orthonormal frame of column vectors."""

    frame: np.ndarray
    tol_rank: float = TOL_RANK

    def __post_init__(self):
        f = np.asarray(self.frame, dtype=float)
        if f.ndim != 2:
            raise SubspaceError("frame must be a 2-d array of column vectors")
        object.__setattr__(self, "frame", f)
        f.setflags(write=False)

    @property
    def ambient_real_dim(self) -> int:
        return self.frame.shape[0]

    @property
    def rank(self) -> int:
        return self.frame.shape[1]

    @staticmethod
    def zero(ambient_dim: int, tol_rank: float = TOL_RANK) -> "RealSubspace":
        return RealSubspace(np.zeros((ambient_dim, 0)), tol_rank)

    @staticmethod
    def full(ambient_dim: int, tol_rank: float = TOL_RANK) -> "RealSubspace":
        return RealSubspace(np.eye(ambient_dim), tol_rank)

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.T

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.frame @ (self.frame.T @ x)

    def distance(self, x: np.ndarray) -> float:
        """Euclidean distance of a vector from the subspace."""
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, other: "RealSubspace", tol: float = TOL_EQ) -> bool:
        if other.rank == 0:
            return True
        resid = other.frame - self.project(other.frame)
        return float(np.linalg.norm(resid, 2)) < tol

    def equals(self, other: "RealSubspace", tol: float = TOL_EQ) -> bool:
        if self.rank != other.rank:
            return False
        if self.rank == 0:
            return True
        angles = principal_angles(self, other)
        return self.contains(other, tol) and float(angles[-1]) < tol


def orthonormalize(vectors, tol_rank: float = TOL_RANK,
                   ambient_dim: int | None = None) -> RealSubspace:
    """Orthonormalize a set of real vectors into a RealSubspace.

    Singular directions below ``tol_rank`` (relative to the largest singular
    value) are dropped.  An empty input yields the zero subspace, which needs
    ``ambient_dim`` to fix the ambient space.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2 and vectors.shape[1] == 0:
        return RealSubspace.zero(vectors.shape[0], tol_rank)
    if not isinstance(vectors, np.ndarray) and len(vectors) == 0:
        if ambient_dim is None:
            raise SubspaceError("empty input requires ambient_dim")
        return RealSubspace.zero(ambient_dim, tol_rank)
    cols = _as_columns(vectors)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return RealSubspace.zero(cols.shape[0], tol_rank)
    rank = int(np.sum(s > tol_rank * s[0]))
    return RealSubspace(u[:, :rank], tol_rank)


def orthocomplement(s: RealSubspace, within: RealSubspace | None = None,
                    tol: float = TOL_EQ) -> RealSubspace:
    """Orthogonal complement of ``s`` in the ambient space, or inside ``within``.

    Requires ``s`` to be contained in ``within`` when the relative form is used.
    """
    if within is None:
        n = s.ambient_real_dim
        if s.rank == 0:
            return RealSubspace.full(n, s.tol_rank)
        u, sv, _ = np.linalg.svd(s.frame, full_matrices=True)
        return RealSubspace(u[:, s.rank:], s.tol_rank)
    if s.ambient_real_dim != within.ambient_real_dim:
        raise SubspaceError("ambient dimension mismatch")
    if not within.contains(s, tol):
        raise SubspaceError("subspace is not contained in `within`")
    # complement computed in the coordinates of `within`, then mapped back
    coords = within.frame.T @ s.frame
    inner = orthocomplement(orthonormalize(coords, s.tol_rank,
                                           ambient_dim=within.rank))
    return RealSubspace(within.frame @ inner.frame, s.tol_rank)


def principal_angles(s1: RealSubspace, s2: RealSubspace) -> np.ndarray:
    """Principal angles between two subspaces, ascending, in [0, pi/2].

    Uses the sine/cosine combined SVD algorithm (scipy), which resolves angles
    near 0 far below the ~1e-8 floor of the plain arccos-of-Gram method.
    """
    if s1.ambient_real_dim != s2.ambient_real_dim:
        raise SubspaceError("ambient dimension mismatch")
    if s1.rank == 0 or s2.rank == 0:
        return np.zeros(0)
    angles = scipy.linalg.subspace_angles(s1.frame, s2.frame)
    return np.sort(angles)


def max_principal_angle(s1: RealSubspace, s2: RealSubspace) -> float:
    """Largest principal angle; 0.0 for a trivial pair (matching rank-0 case)."""
    ang = principal_angles(s1, s2)
    return float(ang[-1]) if ang.size else 0.0


def intersect(s1: RealSubspace, s2: RealSubspace, tol: float = TOL_ANGLE) -> RealSubspace:
    """Numerical intersection: directions with principal angle < tol.

    Implemented through the small singular values of [F1, -F2]; a common
    direction at angle theta shows up as a singular value sqrt(2)*sin(theta/2),
    which stays resolvable down to theta ~ 1e-15 (unlike cosines of the Gram
    matrix).
    """
    if s1.ambient_real_dim != s2.ambient_real_dim:
        raise SubspaceError("ambient dimension mismatch")
    if s1.rank == 0 or s2.rank == 0:
        return RealSubspace.zero(s1.ambient_real_dim, s1.tol_rank)
    stacked = np.hstack([s1.frame, -s2.frame])
    # full right basis: columns beyond rank(stacked) are genuine null directions
    _, sv, vt = np.linalg.svd(stacked, full_matrices=True)
    thr = math.sqrt(2.0) * math.sin(tol / 2.0)
    small = np.ones(vt.shape[0], dtype=bool)
    small[: sv.size] = sv < thr
    null = vt[small].T
    if null.shape[1] == 0:
        return RealSubspace.zero(s1.ambient_real_dim, s1.tol_rank)
    a = null[: s1.rank]
    b = null[s1.rank:]
    # average both representations of each common direction
    vecs = 0.5 * (s1.frame @ a + s2.frame @ b)
    return orthonormalize(vecs, s1.tol_rank)


def sum_closure(s1: RealSubspace, s2: RealSubspace) -> RealSubspace:
    """Closed span of the union, as an orthonormalized frame."""
    if s1.ambient_real_dim != s2.ambient_real_dim:
        raise SubspaceError("ambient dimension mismatch")
    return orthonormalize(np.hstack([s1.frame, s2.frame]), s1.tol_rank)


@dataclass(frozen=True)
class RealLinearOperator:
    """A real-linear operator given by its dense matrix (2n x 2m for realified maps)."""

    matrix: np.ndarray
    adjoint_available: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            raise SubspaceError("operator matrix must be 2-d")
        object.__setattr__(self, "matrix", m)
        m.setflags(write=False)

    def __matmul__(self, other: "RealLinearOperator") -> "RealLinearOperator":
        return RealLinearOperator(self.matrix @ other.matrix, self.adjoint_available)

    def adjoint(self) -> "RealLinearOperator":
        if not self.adjoint_available:
            raise SubspaceError("adjoint unavailable for this operator")
        return RealLinearOperator(self.matrix.T, True)

    def inverse(self, max_cond: float = 1e12) -> "RealLinearOperator":
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise SubspaceError("inverse of a non-square operator")
        c = np.linalg.cond(self.matrix)
        if not np.isfinite(c) or c > max_cond:
            raise SubspaceError(f"operator is numerically singular (cond = {c:.3e})")
        return RealLinearOperator(np.linalg.inv(self.matrix), self.adjoint_available)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def cond(self) -> float:
        return float(np.linalg.cond(self.matrix))

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


def apply_operator(op: RealLinearOperator, s: RealSubspace) -> RealSubspace:
    """Closure of the image A.S (rank preserved when A is invertible)."""
    if op.matrix.shape[1] != s.ambient_real_dim:
        raise SubspaceError("operator column dimension does not match ambient")
    if s.rank == 0:
        return RealSubspace.zero(op.matrix.shape[0], s.tol_rank)
    return orthonormalize(op.matrix @ s.frame, s.tol_rank)


def check_bounded_inverse_identity(op: RealLinearOperator, v: RealSubspace,
                                   tol: float = TOL_EQ,
                                   max_cond: float = 1e12) -> dict:
    """Verify the bounded-inverse orthogonal identity (A V)^perp = (A^T)^{-1} V^perp.

    Returns a report with the maximal principal angle between both sides and a
    pass flag at ``tol``.  A numerically singular A is rejected.
    """
    inv_adj = op.adjoint().inverse(max_cond)
    lhs = orthocomplement(apply_operator(op, v))
    rhs = apply_operator(inv_adj, orthocomplement(v))
    angle = max_principal_angle(lhs, rhs)
    return {
        "max_angle": angle,
        "dim_lhs": lhs.rank,
        "dim_rhs": rhs.rank,
        "cond_A": op.cond(),
        "tolerance": tol,
        "passed": bool(angle < tol and lhs.rank == rhs.rank),
    }


@dataclass(frozen=True)
class RealifiedSpace:
    """The realification R^{2n} of C^n, with the canonical complex structure.

    The complex inner product associated with this realification is taken
    linear in the FIRST slot and conjugate-linear in the second; with that
    convention ``sigma(v, w) = 2 <v, J w>_R`` equals twice the imaginary part
    of the complex pairing of the de-realified vectors.
    """

    complex_dim: int

    @property
    def real_dim(self) -> int:
        return 2 * self.complex_dim

    @property
    def complex_structure(self) -> np.ndarray:
        n = self.complex_dim
        j = np.zeros((2 * n, 2 * n))
        j[:n, n:] = -np.eye(n)
        j[n:, :n] = np.eye(n)
        return j

    def realify(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=complex).ravel()
        if u.shape[0] != self.complex_dim:
            raise SubspaceError("complex dimension mismatch")
        return np.concatenate([u.real, u.imag])

    def derealify(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        n = self.complex_dim
        if x.shape[0] != 2 * n:
            raise SubspaceError("real dimension mismatch")
        return x[:n] + 1j * x[n:]

    def realify_linear(self, m: np.ndarray) -> np.ndarray:
        """Realify a complex-linear matrix: [[Re M, -Im M], [Im M, Re M]]."""
        m = np.asarray(m, dtype=complex)
        return np.block([[m.real, -m.imag], [m.imag, m.real]])

    def realify_antilinear(self, m: np.ndarray) -> np.ndarray:
        """Realify the antilinear map x -> M conj(x): [[Re M, Im M], [Im M, -Re M]]."""
        m = np.asarray(m, dtype=complex)
        return np.block([[m.real, m.imag], [m.imag, -m.real]])

    def real_inner(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.dot(x, y))

    def complex_inner(self, x: np.ndarray, y: np.ndarray) -> complex:
        """Hermitian pairing of de-realified vectors, linear in the first slot."""
        return complex(np.dot(self.derealify(x), np.conj(self.derealify(y))))

    def sigma(self, x: np.ndarray, y: np.ndarray) -> float:
        """Symplectic form sigma(x, y) = 2 <x, J y>_R."""
        n = self.complex_dim
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        # J y = (-y_im, y_re) without building the matrix
        return 2.0 * float(np.dot(x[:n], -y[n:]) + np.dot(x[n:], y[:n]))

    def multiplication_operator(self, diag: np.ndarray) -> RealLinearOperator:
        """Realified entrywise multiplication by a complex vector."""
        return RealLinearOperator(self.realify_linear(np.diag(np.asarray(diag, dtype=complex))))

    def conjugation_operator(self) -> RealLinearOperator:
        """Realified entrywise complex conjugation."""
        return RealLinearOperator(self.realify_antilinear(np.eye(self.complex_dim)))
