"""Dense multipartite operators and the index bookkeeping around them.

Ordering convention
-------------------
A basis state of parties ``0..P-1`` with local indices ``(i_0, ..., i_{P-1})``
sits at flat position ``i_0 * (d_1 * ... * d_{P-1}) + ... + i_{P-1}``, i.e.
party 0 is the most significant digit (row-major).  This is exactly the
order produced by ``numpy.kron(A_0, A_1, ..., A_{P-1})``, and every reshape
in the package derives from it.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import reduce
from math import prod

import numpy as np
import scipy.linalg as la

from .errors import DimensionError, NotUnitaryError

__all__ = [
    "PartyDims",
    "MultipartiteOperator",
    "Tolerances",
    "DEFAULT_TOL",
    "Cut",
    "kron",
    "apply_locals",
    "reshuffle",
    "unreshuffle",
    "join_cut",
    "hs_inner",
    "is_unitary",
    "unitary_error",
    "proportional_to_unitary",
    "unitary_similarity_diagonalize",
    "cluster_values",
    "offdiag_norm",
]


@dataclass(frozen=True)
class PartyDims:
    """Ordered local dimensions of a multipartite system."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise DimensionError("at least one party is required")
        if any(d < 1 for d in dims):
            raise DimensionError(f"party dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return prod(self.dims)

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    def __len__(self):
        return len(self.dims)

    def __iter__(self):
        return iter(self.dims)

    def __getitem__(self, item):
        return self.dims[item]

    @classmethod
    def coerce(cls, dims) -> "PartyDims":
        return dims if isinstance(dims, PartyDims) else cls(tuple(dims))


class MultipartiteOperator:
    """A square complex matrix tagged with its party dimensions.

    The matrix is copied on construction and marked read-only.
    """

    __slots__ = ("_dims", "_matrix")

    def __init__(self, matrix, dims):
        dims = PartyDims.coerce(dims)
        m = np.array(matrix, dtype=complex, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator must be a square matrix, got shape {m.shape}")
        if m.shape[0] != dims.total:
            raise DimensionError(
                f"matrix side {m.shape[0]} does not match product of dims {dims.dims}"
            )
        m.setflags(write=False)
        self._dims = dims
        self._matrix = m

    @property
    def dims(self) -> PartyDims:
        return self._dims

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def n_parties(self) -> int:
        return self._dims.n_parties

    def __repr__(self):
        return f"MultipartiteOperator(dims={self._dims.dims})"

    def __eq__(self, other):
        if not isinstance(other, MultipartiteOperator):
            return NotImplemented
        return self._dims == other._dims and np.array_equal(self._matrix, other._matrix)

    __hash__ = None


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds.

    rank_cut
        Singular values below ``rank_cut * largest`` count as zero.
    residual
        Absolute threshold on operator-norm residuals.
    eig_cluster
        Single-linkage radius for grouping eigenvalues.
    """

    rank_cut: float = 1e-9
    residual: float = 1e-8
    eig_cluster: float = 1e-7

    def __post_init__(self):
        for name in ("rank_cut", "residual", "eig_cluster"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if not self.rank_cut < 1:
            raise ValueError("rank_cut must be < 1")


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class Cut:
    """Bipartition of parties ``0..n-1`` into ``left`` and its complement."""

    left: tuple[int, ...]
    n_parties: int

    def __post_init__(self):
        left = tuple(sorted(set(int(p) for p in self.left)))
        if not left or len(left) >= self.n_parties:
            raise DimensionError("cut must be a nonempty proper subset of the parties")
        if left[0] < 0 or left[-1] >= self.n_parties:
            raise DimensionError(f"cut parties {left} out of range for {self.n_parties} parties")
        object.__setattr__(self, "left", left)

    @property
    def right(self) -> tuple[int, ...]:
        return tuple(p for p in range(self.n_parties) if p not in self.left)

    @classmethod
    def single(cls, party: int, n_parties: int) -> "Cut":
        return cls((party,), n_parties)

    def complement(self) -> "Cut":
        return Cut(self.right, self.n_parties)

    def __str__(self):
        fmt = lambda s: "{" + ",".join(map(str, s)) + "}"
        return f"{fmt(self.left)}|{fmt(self.right)}"


def kron(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of square matrices, party 0 most significant."""
    factors = list(factors)
    if not factors:
        raise ValueError("kron needs at least one factor")
    for f in factors:
        f = np.asarray(f)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise DimensionError(f"kron factors must be square, got shape {f.shape}")
    return reduce(np.kron, (np.asarray(f, dtype=complex) for f in factors))


def _as_party_map(locals_, n):
    if locals_ is None:
        return {}
    if isinstance(locals_, Mapping):
        return {int(k): v for k, v in locals_.items() if v is not None}
    locals_ = list(locals_)
    if len(locals_) != n:
        raise DimensionError(f"expected {n} local operators, got {len(locals_)}")
    return {k: v for k, v in enumerate(locals_) if v is not None}


def _apply_on_party(tensor, op, party, n):
    # tensor axes: (row_0..row_{n-1}, col_0..col_{n-1}); op acts on row axis `party`
    out = np.tensordot(op, tensor, axes=([1], [party]))
    return np.moveaxis(out, 0, party)


def apply_locals(U, lefts=None, rights=None, tol: Tolerances = DEFAULT_TOL, check=True):
    """Return ``(⊗ lefts) U (⊗ rights)†``.

    ``lefts`` and ``rights`` are either a per-party sequence (``None`` for
    identity) or a mapping ``party -> matrix``.
    """
    dims = U.dims.dims
    n = len(dims)
    lmap = _as_party_map(lefts, n)
    rmap = _as_party_map(rights, n)
    for side in (lmap, rmap):
        for party, op in side.items():
            op = np.asarray(op)
            if not 0 <= party < n:
                raise DimensionError(f"party {party} out of range")
            if op.shape != (dims[party], dims[party]):
                raise DimensionError(
                    f"local on party {party} has shape {op.shape}, expected {(dims[party],) * 2}"
                )
            if check and not is_unitary(op, tol):
                raise NotUnitaryError(f"local operator on party {party} is not unitary")
    t = U.matrix.reshape(dims + dims)
    for party, op in lmap.items():
        t = _apply_on_party(t, np.asarray(op, dtype=complex), party, n)
    if rmap:
        # X V† = (V X†)†
        t = np.conj(np.swapaxes(t.reshape(U.dims.total, U.dims.total), 0, 1)).reshape(dims + dims)
        for party, op in rmap.items():
            t = _apply_on_party(t, np.asarray(op, dtype=complex), party, n)
        t = np.conj(np.swapaxes(t.reshape(U.dims.total, U.dims.total), 0, 1))
    return MultipartiteOperator(t.reshape(U.dims.total, U.dims.total), U.dims)


def _cut_axes(dims, cut):
    n = len(dims)
    if cut.n_parties != n:
        raise DimensionError(f"cut is for {cut.n_parties} parties, operator has {n}")
    S, T = list(cut.left), list(cut.right)
    # row axes are 0..n-1, column axes n..2n-1
    return S + [n + p for p in S] + T + [n + p for p in T]


def reshuffle(U, cut: Cut) -> np.ndarray:
    """Realignment matrix of ``U`` across ``cut``.

    ``R[(i_S, j_S), (i_T, j_T)] = U[(i_S, i_T), (j_S, j_T)]`` where ``S`` is
    ``cut.left``, ``T`` its complement, and each composite index is
    row-major over the parties of that side in increasing party order.
    Row ``(i_S, j_S)`` is the row-major vectorization of an operator on ``S``,
    so reshaping a left singular vector to ``(D_S, D_S)`` gives that operator.
    """
    dims = U.dims.dims
    axes = _cut_axes(dims, cut)
    dS = prod(dims[p] for p in cut.left)
    dT = prod(dims[p] for p in cut.right)
    t = U.matrix.reshape(dims + dims).transpose(axes)
    return t.reshape(dS * dS, dT * dT)


def unreshuffle(R: np.ndarray, dims, cut: Cut) -> MultipartiteOperator:
    """Inverse of :func:`reshuffle`."""
    dims = PartyDims.coerce(dims).dims
    axes = _cut_axes(dims, cut)
    shape = [dims[p] for p in cut.left] * 2 + [dims[p] for p in cut.right] * 2
    R = np.asarray(R)
    if R.size != prod(shape):
        raise DimensionError("realignment matrix size does not match dims")
    t = R.reshape(shape).transpose(np.argsort(axes))
    D = prod(dims)
    return MultipartiteOperator(t.reshape(D, D), dims)


def join_cut(A: np.ndarray, B: np.ndarray, dims, cut: Cut) -> np.ndarray:
    """Full matrix of ``A ⊗ B`` with ``A`` on ``cut.left`` and ``B`` on the rest."""
    dims = PartyDims.coerce(dims).dims
    S, T = cut.left, cut.right
    order = list(S) + list(T)
    n = len(dims)
    local = [dims[p] for p in order]
    t = np.kron(A, B).reshape(local + local)
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [n + i for i in inv])
    D = prod(dims)
    return t.reshape(D, D)


def hs_inner(A, B) -> complex:
    """Hilbert-Schmidt inner product ``Tr(A† B)``."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    return complex(np.vdot(A, B))


def unitary_error(M) -> float:
    M = np.asarray(M)
    return float(np.linalg.norm(M.conj().T @ M - np.eye(M.shape[0]), 2))


def is_unitary(M, tol: Tolerances = DEFAULT_TOL) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return unitary_error(M) <= tol.residual


def offdiag_norm(M) -> float:
    """Frobenius norm of the off-diagonal part."""
    M = np.asarray(M)
    return float(np.linalg.norm(M - np.diag(np.diag(M))))


def _first_phase(M, threshold):
    flat = np.asarray(M).ravel()
    idx = np.flatnonzero(np.abs(flat) > threshold)
    if idx.size == 0:
        return 1.0 + 0j
    z = flat[idx[0]]
    return z / abs(z)


def proportional_to_unitary(M, tol: Tolerances = DEFAULT_TOL, rtol=None):
    """Return ``s`` with ``M = s W`` for a unitary ``W``, or None.

    ``|s|`` is the common singular value.  Its phase is the phase of the
    first row-major entry of ``M`` with modulus above ``tol.residual``, so
    that entry of ``W`` is real and positive.  The singular values must agree
    to within ``rtol`` (default ``tol.rank_cut``) relative to the largest.
    """
    M = np.asarray(M, dtype=complex)
    sv = la.svdvals(M)
    if sv.size == 0 or sv[0] == 0:
        raise ValueError("zero matrix is not proportional to a unitary")
    rtol = tol.rank_cut if rtol is None else rtol
    if sv[0] - sv[-1] > rtol * sv[0]:
        return None
    modulus = float(np.mean(sv))
    return modulus * _first_phase(M, tol.residual)


def cluster_values(values, radius: float) -> np.ndarray:
    """Single-linkage clusters of complex ``values``; returns integer labels.

    Labels are assigned in order of first appearance.
    """
    values = np.asarray(values, dtype=complex)
    n = values.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    dist = np.abs(values[:, None] - values[None, :])
    for i in range(n):
        for j in range(i + 1, n):
            if dist[i, j] <= radius:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    labels = np.empty(n, dtype=int)
    seen = {}
    for i in range(n):
        root = find(i)
        labels[i] = seen.setdefault(root, len(seen))
    return labels


def unitary_similarity_diagonalize(N, tol: Tolerances = DEFAULT_TOL):
    """Unitary ``S`` with ``S N S†`` diagonal, for normal ``N``.

    Eigenvalues come out grouped by cluster (radius ``tol.eig_cluster``);
    clusters are ordered by the phase angle in ``[0, 2π)`` of their mean,
    ties broken by modulus.  Each cluster shares the orthonormal Schur basis
    of its subspace.

    Returns ``(S, eigvals)``.
    """
    N = np.asarray(N, dtype=complex)
    if N.ndim != 2 or N.shape[0] != N.shape[1]:
        raise DimensionError("matrix must be square")
    comm = np.linalg.norm(N.conj().T @ N - N @ N.conj().T, 2)
    if comm > tol.residual * max(1.0, np.linalg.norm(N, 2) ** 2):
        raise ValueError(f"matrix is not normal (commutator norm {comm:.3e})")
    T, Q = la.schur(N, output="complex")
    eig = np.diag(T).copy()
    labels = cluster_values(eig, tol.eig_cluster)
    keys = []
    for lab in range(labels.max() + 1 if labels.size else 0):
        mean = eig[labels == lab].mean()
        keys.append((np.angle(mean) % (2 * np.pi), abs(mean)))
    cluster_rank = {lab: r for r, lab in enumerate(sorted(range(len(keys)), key=lambda l: keys[l]))}
    perm = sorted(
        range(eig.size),
        key=lambda i: (cluster_rank[labels[i]], np.angle(eig[i]) % (2 * np.pi), abs(eig[i])),
    )
    S = Q[:, perm].conj().T
    return S, eig[perm]
