"""Control-party detection for unitaries of any Schmidt rank.

A party can act as a control whenever the products ``A_i† A_j`` of its
single-party Schmidt operators span at most two dimensions: a common SVD of
the ``A_i`` then exists and block-diagonalizes the unitary in that party's
basis.  The condition is sufficient only, so failing it yields ``unknown``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controlize import extract_blocks
from .core import DEFAULT_TOL, Cut, MultipartiteOperator, Tolerances, apply_locals, kron
from .errors import DimensionError, NumericalFailure, PreconditionFailed
from .schmidt import decompose
from .simdiag import LocalDiagonalizer, gram_span, lemma2_diagonalize, span_dim

__all__ = [
    "CAN_CONTROL",
    "UNKNOWN",
    "PartyVerdict",
    "ControlScanReport",
    "theorem9_scan",
    "theorem4_check",
    "unitarity_expansion",
    "lemma3_check",
]

CAN_CONTROL = "can_control"
UNKNOWN = "unknown"


@dataclass
class PartyVerdict:
    party: int
    schmidt_rank: int
    span_dim: int
    contains_identity: bool
    verdict: str
    diagonalizer: LocalDiagonalizer | None = None
    block_residual: float | None = None


@dataclass
class ControlScanReport:
    dims: tuple
    parties: list = field(default_factory=list)

    @property
    def profile(self) -> tuple:
        return tuple(v.schmidt_rank for v in self.parties)

    @property
    def can_control(self) -> frozenset:
        return frozenset(v.party for v in self.parties if v.verdict == CAN_CONTROL)

    def __str__(self):
        lines = [f"dims {' '.join(map(str, self.dims))}", f"schmidt profile {list(self.profile)}"]
        for v in self.parties:
            extra = "" if v.block_residual is None else f" block_residual={v.block_residual:.2e}"
            lines.append(
                f"party {v.party}: rank={v.schmidt_rank} span_dim={v.span_dim} "
                f"identity={'yes' if v.contains_identity else 'no'} {v.verdict}{extra}"
            )
        return "\n".join(lines)


def theorem9_scan(U: MultipartiteOperator, tol: Tolerances = DEFAULT_TOL) -> ControlScanReport:
    """Per-party control verdicts from the single-party Schmidt operators.

    A ``can_control`` verdict carries the diagonalizer and the off-block
    mass left after applying it, which is required to be within
    ``tol.residual``.
    """
    n = U.n_parties
    report = ControlScanReport(U.dims.dims)
    for a in range(n):
        dec = decompose(U, Cut.single(a, n), tol)
        span = gram_span(dec.left_ops, tol)
        v = PartyVerdict(a, dec.rank, span.dim, span.contains_identity, UNKNOWN)
        if span.dim <= 2 and span.contains_identity:
            try:
                ld = lemma2_diagonalize(dec.left_ops, tol)
            except (PreconditionFailed, NumericalFailure):
                ld = None
            if ld is not None:
                U1 = apply_locals(U, {a: ld.left}, {a: ld.right}, tol)
                _, off = extract_blocks(U1, [a])
                v.diagonalizer, v.block_residual = ld, off
                if off <= tol.residual:
                    v.verdict = CAN_CONTROL
        report.parties.append(v)
    return report


def _rank(M, tol):
    s = np.linalg.svd(M, compute_uv=False)
    return 0 if s.size == 0 or s[0] == 0 else int(np.count_nonzero(s > tol.rank_cut * s[0]))


def theorem4_check(terms, coeffs, tol: Tolerances = DEFAULT_TOL):
    """Check ``δ1 + δ2 <= N + 1`` for a product expansion of a product operator.

    ``terms`` is a sequence of pairs ``(M1_k, M2_k)`` and ``coeffs`` the
    nonzero weights ``c_k``.  Returns ``(ok, δ1, δ2, N)``; raises
    :class:`PreconditionFailed` if ``Σ c_k M1_k ⊗ M2_k`` is not a nonzero
    product operator or a coefficient vanishes.
    """
    terms = list(terms)
    coeffs = np.asarray(list(coeffs), dtype=complex)
    if len(terms) != coeffs.size or not terms:
        raise DimensionError("need one coefficient per term and at least one term")
    if np.any(coeffs == 0):
        raise PreconditionFailed("all coefficients must be nonzero")
    first = [np.asarray(t[0], dtype=complex) for t in terms]
    second = [np.asarray(t[1], dtype=complex) for t in terms]
    # the realigned sum is Σ c_k vec(M1_k) vec(M2_k)^T; product operator iff rank 1
    realigned = sum(c * np.outer(a.ravel(), b.ravel()) for c, a, b in zip(coeffs, first, second))
    if _rank(realigned, tol) != 1:
        raise PreconditionFailed("the weighted sum is not a product operator")
    d1, d2 = span_dim(first, tol), span_dim(second, tol)
    N = len(terms)
    return d1 + d2 <= N + 1, d1, d2, N


def unitarity_expansion(U: MultipartiteOperator, cut, tol: Tolerances = DEFAULT_TOL):
    """Product expansion of ``U† U = I`` across ``cut``.

    From ``U = Σ λ_j A_j ⊗ B_j`` the terms are ``(A_i† A_j, B_i† B_j)`` with
    weights ``λ_i λ_j``, so ``N`` is the square of the cut rank.
    """
    dec = decompose(U, cut, tol)
    terms, coeffs = [], []
    for i, (li, Ai, Bi) in enumerate(zip(dec.coeffs, dec.left_ops, dec.right_ops)):
        for j, (lj, Aj, Bj) in enumerate(zip(dec.coeffs, dec.left_ops, dec.right_ops)):
            terms.append((Ai.conj().T @ Aj, Bi.conj().T @ Bj))
            coeffs.append(li * lj)
    return terms, coeffs


def lemma3_check(first, second, tol: Tolerances = DEFAULT_TOL):
    """Span of ``{A_j ⊗ B_j}`` versus the span of ``{A_j}`` when every ``B_j != 0``.

    Returns ``(ok, δ_first, δ_stacked)`` with ``ok`` meaning
    ``δ_stacked >= δ_first``.
    """
    first = [np.asarray(a, dtype=complex) for a in first]
    second = [np.asarray(b, dtype=complex) for b in second]
    if len(first) != len(second) or not first:
        raise DimensionError("need equally many operators on both sides")
    if any(not np.any(b) for b in second):
        raise PreconditionFailed("every operator on the second side must be nonzero")
    d_first = span_dim(first, tol)
    d_stacked = span_dim([kron([a, b]) for a, b in zip(first, second)], tol)
    return d_stacked >= d_first, d_first, d_stacked
