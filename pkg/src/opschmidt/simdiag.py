"""Simultaneous singular value decomposition of operator families.

The central routine, :func:`lemma2_diagonalize`, handles families ``{R_i}``
whose products ``R_i† R_j`` span a space of dimension at most two that
contains the identity.  For such families one pair of unitaries ``(U, V)``
makes every ``U R_i V†`` diagonal, and the construction is explicit:

1. Fix ``K`` and find ``L`` such that ``I`` and ``R_K† R_L`` span the
   product space, then fit ``R_i† R_L = μ_i I + ν_i R_K† R_L``.  A nonzero
   ``μ_i`` forces ``R_L`` to be invertible and ``R_i† = μ_i R_L⁻¹ + ν_i R_K†``.
   If also ``ν_L ≠ 0`` the SVD of ``R_L`` diagonalizes everything.
2. Otherwise ``R_L`` is proportional to a unitary ``W_L``.  If ``R_K`` is too,
   a unitary similarity ``V`` diagonalizing ``R_K† W_L`` gives ``U = V W_L†``.
3. Otherwise ``R_K† R_K`` is Hermitian and not a multiple of ``I``; its
   eigenbasis ``V`` again gives ``U = V W_L†``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .core import (
    DEFAULT_TOL,
    Tolerances,
    offdiag_norm,
    proportional_to_unitary,
    unitary_similarity_diagonalize,
)
from .errors import DimensionError, NotUnitaryError, NumericalFailure, PreconditionFailed

__all__ = [
    "SpanReport",
    "LocalDiagonalizer",
    "span_dim",
    "gram_span",
    "lemma2_diagonalize",
    "simultaneous_svd_to_control",
]


@dataclass(frozen=True)
class SpanReport:
    """Linear span of the products ``{R_i† R_j}`` over all ordered pairs."""

    dim: int
    contains_identity: bool
    basis: np.ndarray  # shape (dim, d*d); rows are orthonormal vectorized operators
    projection_residual_of_identity: float

    def coords(self, M) -> np.ndarray:
        """Coordinates of ``M`` in :attr:`basis`."""
        return self.basis.conj() @ np.asarray(M).ravel()


@dataclass
class LocalDiagonalizer:
    """Unitaries with ``left @ R_i @ right.conj().T`` diagonal for each input."""

    left: np.ndarray
    right: np.ndarray
    diagonals: list
    residual: float
    branch: str = ""

    def transform(self, R) -> np.ndarray:
        return self.left @ np.asarray(R) @ self.right.conj().T


def _vectorized_span(vectors, tol):
    M = np.stack(vectors, axis=1)
    u, s, _ = la.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return 0, np.zeros((0, M.shape[0]), dtype=complex)
    r = int(np.count_nonzero(s > tol.rank_cut * s[0]))
    return r, u[:, :r].T.copy()


def span_dim(ops, tol: Tolerances = DEFAULT_TOL) -> int:
    """Dimension of the linear span of ``ops``."""
    ops = [np.asarray(o, dtype=complex) for o in ops]
    if not ops:
        return 0
    return _vectorized_span([o.ravel() for o in ops], tol)[0]


def gram_span(ops, tol: Tolerances = DEFAULT_TOL) -> SpanReport:
    """Span report for ``{R_i† R_j}`` built from ``ops``."""
    ops = [np.asarray(o, dtype=complex) for o in ops]
    if not ops:
        raise ValueError("gram_span needs at least one operator")
    shape = ops[0].shape
    if any(o.shape != shape for o in ops) or len(shape) != 2:
        raise DimensionError("operators must be matrices of equal shape")
    products = [(Ri.conj().T @ Rj).ravel() for Ri in ops for Rj in ops]
    dim, basis = _vectorized_span(products, tol)
    d = shape[1]
    eye = np.eye(d).ravel()
    if dim:
        # rows of basis are orthonormal: projection is basis^T (conj(basis) @ v)
        proj = basis.T @ (basis.conj() @ eye)
    else:
        proj = np.zeros_like(eye)
    res = float(np.linalg.norm(eye - proj))
    contains = res <= tol.residual * np.sqrt(d)
    return SpanReport(dim, bool(contains), basis, res)


def _svd_pair(R, threshold):
    X, s, Yh = la.svd(R)
    # first significant entry of each left singular vector real positive
    for k in range(X.shape[1]):
        col = X[:, k]
        idx = np.flatnonzero(np.abs(col) > threshold)
        if idx.size:
            ph = col[idx[0]] / abs(col[idx[0]])
            X[:, k] = col * np.conj(ph)
            Yh[k, :] = Yh[k, :] * ph
    return X.conj().T, Yh  # U = X†, V = Y† = Yh


def _finish(ops, U, V, branch):
    diags, worst = [], 0.0
    for R in ops:
        T = U @ R @ V.conj().T
        diags.append(np.diag(T).copy())
        worst = max(worst, offdiag_norm(T))
    return LocalDiagonalizer(U, V, diags, worst, branch)


def _accept(result, ops, tol):
    scale = max(np.linalg.norm(R) for R in ops)
    return result.residual <= tol.residual * max(scale, 1e-300) * 1e-1


def _polar_unitary(R):
    W, _ = la.polar(R)
    return W


def _case_analysis(ops, report, tol):
    """Run the K/L case analysis; return a LocalDiagonalizer or None."""
    d = ops[0].shape[0]
    eye = np.eye(d)
    norms = np.array([np.linalg.norm(R) for R in ops])
    order = list(np.argsort(-norms, kind="stable"))
    c_eye = report.coords(eye) / np.sqrt(d)
    independence = np.sqrt(tol.rank_cut)

    for K in order:
        RK = ops[K]
        if norms[K] == 0:
            continue
        unitary_L = []  # admissible L with significant μ but ν_L = 0
        for L in order:
            RL = ops[L]
            if norms[L] == 0:
                continue
            KL = RK.conj().T @ RL
            nKL = np.linalg.norm(KL)
            if nKL <= tol.rank_cut * norms[K] * norms[L]:
                continue
            G = np.stack([c_eye, report.coords(KL) / nKL], axis=1)
            if la.svdvals(G)[-1] <= independence:
                continue  # I and R_K† R_L do not span the product space
            rhs = np.stack([report.coords(R.conj().T @ RL) for R in ops], axis=1)
            coef = la.solve(G, rhs)
            mu = coef[0] / np.sqrt(d)
            nu = coef[1] / nKL
            mu_scale = np.abs(mu) * np.sqrt(d) / np.maximum(norms * norms[L], 1e-300)
            if not np.any(mu_scale > tol.residual):
                continue
            nu_L_scale = abs(nu[L]) * nKL / max(norms[L] ** 2, 1e-300)
            if nu_L_scale > tol.residual:
                U, V = _svd_pair(RL, tol.residual)
                res = _finish(ops, U, V, "generic")
                if _accept(res, ops, tol):
                    return res
            else:
                unitary_L.append(L)

        for L in unitary_L:
            WL = _polar_unitary(ops[L])
            if proportional_to_unitary(RK, tol, rtol=np.sqrt(tol.rank_cut)) is not None:
                N = RK.conj().T @ WL
                try:
                    S, _ = unitary_similarity_diagonalize(N, tol)
                except ValueError:
                    continue
                branch = "unitary_pair"
            else:
                H = RK.conj().T @ RK
                H = (H + H.conj().T) / 2
                _, evecs = la.eigh(H)
                S = evecs.conj().T
                branch = "hermitian"
            res = _finish(ops, S @ WL.conj().T, S, branch)
            if _accept(res, ops, tol):
                return res
    return None


def lemma2_diagonalize(ops, tol: Tolerances = DEFAULT_TOL) -> LocalDiagonalizer:
    """Common ``(U, V)`` diagonalizing every ``U R_i V†``.

    Requires the products ``R_i† R_j`` to span at most two dimensions and
    to contain the identity; raises :class:`PreconditionFailed` otherwise.

    The returned ``branch`` names the case that produced the result:
    ``"already_diagonal"``, ``"trivial"`` (one-dimensional span),
    ``"generic"``, ``"unitary_pair"`` or ``"hermitian"``.  Families in which
    no member is invertible (for example two complementary projectors) fall
    outside the case analysis; they are augmented with one fixed invertible
    combination of the members, which has the same simultaneous SVD, and the
    branch is prefixed with ``"recombined:"``.
    """
    ops = [np.asarray(R, dtype=complex) for R in ops]
    if not ops:
        raise ValueError("need at least one operator")
    shape = ops[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or any(R.shape != shape for R in ops):
        raise DimensionError("operators must be square and of equal shape")
    report = gram_span(ops, tol)
    if report.dim > 2 or not report.contains_identity:
        raise PreconditionFailed(
            f"products span dimension {report.dim} "
            f"({'with' if report.contains_identity else 'without'} the identity); "
            "need dimension <= 2 containing the identity"
        )
    d = shape[0]
    scale = max(np.linalg.norm(R) for R in ops)

    if all(offdiag_norm(R) <= tol.residual * 1e-1 * scale for R in ops):
        return _finish(ops, np.eye(d, dtype=complex), np.eye(d, dtype=complex), "already_diagonal")

    if report.dim == 1:
        K = int(np.argmax([np.linalg.norm(R) for R in ops]))
        W = _polar_unitary(ops[K])
        res = _finish(ops, W.conj().T, np.eye(d, dtype=complex), "trivial")
        if _accept(res, ops, tol):
            return res
        raise NumericalFailure(f"one-dimensional family not diagonalized (residual {res.residual:.2e})")

    res = _case_analysis(ops, report, tol)
    if res is not None:
        return res

    # no invertible member: add a fixed combination with distinct coefficient moduli
    coeffs = [(k + 1) * np.exp(0.7j * (k + 1)) for k in range(len(ops))]
    extra = sum(c * R for c, R in zip(coeffs, ops))
    augmented = ops + [extra]
    res = _case_analysis(augmented, gram_span(augmented, tol), tol)
    if res is not None:
        out = _finish(ops, res.left, res.right, "recombined:" + res.branch)
        if _accept(out, ops, tol):
            return out
    raise NumericalFailure("no branch of the construction reached the residual tolerance")


def simultaneous_svd_to_control(decomp, diag: LocalDiagonalizer, tol: Tolerances = DEFAULT_TOL):
    """Controlled blocks ``W_k = Σ_j λ_j a_{jk} B_j`` of a Schmidt decomposition.

    ``diag`` must diagonalize ``decomp.left_ops``; ``a_{jk}`` is the ``k``-th
    diagonal entry of ``U A_j V†``.  Each block is an operator on the right
    side of the cut and must be unitary.
    """
    A = [diag.transform(Aj) for Aj in decomp.left_ops]
    scale = max(np.linalg.norm(a) for a in A) if A else 1.0
    if any(offdiag_norm(a) > tol.residual * max(scale, 1.0) for a in A):
        raise ValueError("diagonalizer does not diagonalize the Schmidt operators")
    dS = A[0].shape[0]
    blocks = []
    for k in range(dS):
        W = sum(lam * a[k, k] * B for lam, a, B in zip(decomp.coeffs, A, decomp.right_ops))
        err = np.linalg.norm(W.conj().T @ W - np.eye(W.shape[0]), 2)
        if err > tol.residual:
            raise NotUnitaryError(f"block {k} is not unitary (error {err:.2e})")
        blocks.append(W)
    return blocks
