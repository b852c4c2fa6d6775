"""Local-unitary reduction of Schmidt-rank-2 unitaries to controlled form.

:func:`theorem0_pipeline` turns any multipartite Schmidt-rank-2 unitary into
a fully controlled unitary (every party but one is a control) and then into
a diagonal unitary, emitting a :class:`ControlledFormCertificate`.
:func:`theorem8_bipartite` refines the bipartite case to a two-term
controlled form ``P1 ⊗ W1 + P2 ⊗ W2``.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from itertools import product as iproduct
from math import prod

import numpy as np
import scipy.linalg as la

from .core import (
    DEFAULT_TOL,
    Cut,
    MultipartiteOperator,
    PartyDims,
    Tolerances,
    apply_locals,
    cluster_values,
    is_unitary,
    join_cut,
    offdiag_norm,
    proportional_to_unitary,
    unitary_error,
    unitary_similarity_diagonalize,
)
from .errors import (
    ClusterCountMismatch,
    DimensionError,
    NotRank2,
    NotUnitaryError,
    NumericalFailure,
    PreconditionFailed,
)
from .schmidt import decompose, product_rank2_decompose
from .simdiag import gram_span, lemma2_diagonalize, span_dim

__all__ = [
    "ControlParty",
    "PipelineTrace",
    "ControlledFormCertificate",
    "TwoTermControl",
    "Theorem8Result",
    "build_controlled",
    "extract_blocks",
    "certify_locals",
    "theorem0_pipeline",
    "theorem8_bipartite",
]

BRANCH_GENERIC = "generic"
BRANCH_VANISHING = "vanishing-cross-term"
BRANCH_FACTORED = "party-factored"


@dataclass(frozen=True)
class ControlParty:
    party: int
    left: np.ndarray
    right: np.ndarray


@dataclass
class PipelineTrace:
    """Intermediate quantities recorded while building a certificate."""

    schmidt_ranks: list
    span_dims: list
    branch: str
    routes: dict = field(default_factory=dict)
    vanishing_party: int | None = None
    vanishing_constant: complex | None = None
    sketch_draws: int = 0
    mu: np.ndarray | None = None
    quadratic_rows: np.ndarray | None = None


@dataclass
class ControlledFormCertificate:
    """Local unitaries bringing ``U`` to controlled and diagonal form.

    Applying the control parties' locals alone gives
    ``Σ_k |k⟩⟨k| ⊗ blocks[k]`` where ``k`` runs over the control parties'
    basis indices (in increasing party order) and each block acts on the
    remaining parties.  Applying the target's locals as well gives
    ``diag(diagonal_phases)``.
    """

    dims: tuple
    control_parties: list
    target_party: int | None
    target_left: np.ndarray | None
    target_right: np.ndarray | None
    blocks: dict
    diagonal_phases: np.ndarray
    residual: float
    branch: str = BRANCH_GENERIC
    trace: PipelineTrace | None = None

    @property
    def control_indices(self) -> list[int]:
        return [c.party for c in self.control_parties]

    def lefts(self) -> dict:
        out = {c.party: c.left for c in self.control_parties}
        if self.target_party is not None:
            out[self.target_party] = self.target_left
        return out

    def rights(self) -> dict:
        out = {c.party: c.right for c in self.control_parties}
        if self.target_party is not None:
            out[self.target_party] = self.target_right
        return out


@dataclass
class TwoTermControl:
    """``(⊗ lefts) U (⊗ rights)† = P1 ⊗ W1 + P2 ⊗ W2`` with ``P1``, ``P2`` on ``control_party``."""

    control_party: int
    P1: np.ndarray
    P2: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    lefts: dict
    rights: dict
    residual: float
    branch: str

    def canonical(self, dims) -> np.ndarray:
        cut = Cut.single(self.control_party, 2)
        return join_cut(self.P1, self.W1, dims, cut) + join_cut(self.P2, self.W2, dims, cut)


@dataclass
class Theorem8Result:
    two_term: TwoTermControl
    certificates: dict
    control_party: int
    branch: str
    mu: np.ndarray
    quadratic_rows: np.ndarray
    eigenvalues: np.ndarray | None = None
    cluster_labels: np.ndarray | None = None


def _control_layout(dims, controls):
    controls = sorted(controls)
    rest = [p for p in range(len(dims)) if p not in controls]
    return controls, rest


def _normalize_blocks(blocks, dims, controls):
    if isinstance(blocks, Mapping):
        return {tuple(int(i) for i in k): np.asarray(v, dtype=complex) for k, v in blocks.items()}
    blocks = list(blocks)
    if len(controls) != 1:
        raise DimensionError("a block sequence is only allowed with a single control party")
    return {(k,): np.asarray(W, dtype=complex) for k, W in enumerate(blocks)}


def _assemble(dims, controls, blocks):
    dims = tuple(dims)
    n = len(dims)
    controls, rest = _control_layout(dims, controls)
    D = prod(dims)
    drest = prod(dims[p] for p in rest)
    t = np.zeros(dims + dims, dtype=complex)
    expected = list(iproduct(*[range(dims[c]) for c in controls]))
    if set(blocks) != set(expected):
        raise DimensionError("blocks must be given for every control multi-index")
    for k in expected:
        W = blocks[k]
        if W.shape != (drest, drest):
            raise DimensionError(f"block {k} has shape {W.shape}, expected {(drest, drest)}")
        pos = dict(zip(controls, k))
        idx = tuple(pos.get(p, slice(None)) for p in range(n)) * 2
        t[idx] = W.reshape([dims[p] for p in rest] * 2)
    return t.reshape(D, D)


def build_controlled(dims, blocks, controls=None, locals_=None, tol: Tolerances = DEFAULT_TOL):
    """Assemble ``Σ_k |k⟩⟨k| ⊗ W_k`` and undo the given local unitaries.

    ``controls`` defaults to every party but the last.  ``blocks`` maps
    control multi-indices to operators on the remaining parties (a plain
    sequence is accepted for a single control party).  ``locals_`` maps a
    party to ``(left, right)``; the result is ``(⊗ left)† C (⊗ right)``, the
    operator that those locals bring back to the controlled form ``C``.
    """
    dims = PartyDims.coerce(dims).dims
    if controls is None:
        controls = list(range(len(dims) - 1))
    blocks = _normalize_blocks(blocks, dims, controls)
    for k, W in blocks.items():
        if not is_unitary(W, tol):
            raise NotUnitaryError(f"block {k} is not unitary")
    C = MultipartiteOperator(_assemble(dims, controls, blocks), dims)
    if not locals_:
        return C
    lefts = {p: np.asarray(lr[0]).conj().T for p, lr in locals_.items()}
    rights = {p: np.asarray(lr[1]).conj().T for p, lr in locals_.items()}
    return apply_locals(C, lefts, rights, tol)


def extract_blocks(M: MultipartiteOperator, controls):
    """Diagonal blocks of ``M`` over the control parties' basis indices.

    Returns ``(blocks, off_block_norm)``.
    """
    dims = M.dims.dims
    n = len(dims)
    controls, rest = _control_layout(dims, controls)
    drest = prod(dims[p] for p in rest)
    t = M.matrix.reshape(dims + dims)
    blocks = {}
    for k in iproduct(*[range(dims[c]) for c in controls]):
        pos = dict(zip(controls, k))
        idx = tuple(pos.get(p, slice(None)) for p in range(n)) * 2
        blocks[k] = t[idx].reshape(drest, drest).copy()
    off = float(np.linalg.norm(M.matrix - _assemble(dims, controls, blocks), 2))
    return blocks, off


def _max_gram_pair(blocks):
    V = np.stack([W.ravel() for W in blocks])
    G = V.conj() @ V.T
    diag = np.real(np.diag(G))
    det = np.outer(diag, diag) - np.abs(G) ** 2
    np.fill_diagonal(det, -np.inf)
    a, b = np.unravel_index(int(np.argmax(det)), det.shape)
    return (int(a), int(b)) if a < b else (int(b), int(a))


def _similarity_basis(N, tol):
    """Unitary S with S N S† diagonal; the identity when N already is."""
    if offdiag_norm(N) <= 0.1 * tol.residual:
        return np.eye(N.shape[0], dtype=complex)
    S, _ = unitary_similarity_diagonalize(N, tol)
    return S


def certify_locals(U, lefts, rights, controls, target, tol=DEFAULT_TOL, trace=None, branch=BRANCH_GENERIC):
    """Build a certificate from a complete set of local unitaries.

    ``lefts``/``rights`` map each party in ``controls`` (and ``target``) to
    its local unitary.  Blocks are read off after applying the control
    locals only.
    """
    dims = U.dims.dims
    controls = sorted(controls)
    cl = {p: lefts[p] for p in controls}
    cr = {p: rights[p] for p in controls}
    U1 = apply_locals(U, cl, cr, tol)
    blocks, off_block = extract_blocks(U1, controls)
    block_err = max(unitary_error(W) for W in blocks.values())
    if target is not None:
        U2 = apply_locals(U1, {target: lefts[target]}, {target: rights[target]}, tol)
    else:
        U2 = U1
    phases = np.diag(U2.matrix).copy()
    off_diag = offdiag_norm(U2.matrix)
    recon = apply_locals(
        MultipartiteOperator(np.diag(phases), dims),
        {p: np.asarray(m).conj().T for p, m in lefts.items()},
        {p: np.asarray(m).conj().T for p, m in rights.items()},
        tol,
    )
    rec_err = float(np.linalg.norm(recon.matrix - U.matrix, 2))
    residual = max(off_block, block_err, off_diag, rec_err, float(np.max(np.abs(np.abs(phases) - 1))))
    return ControlledFormCertificate(
        dims=dims,
        control_parties=[ControlParty(p, np.asarray(lefts[p]), np.asarray(rights[p])) for p in controls],
        target_party=target,
        target_left=None if target is None else np.asarray(lefts[target]),
        target_right=None if target is None else np.asarray(rights[target]),
        blocks=blocks,
        diagonal_phases=phases,
        residual=residual,
        branch=branch,
        trace=trace,
    )


def _unitary_factor(M, tol):
    s = proportional_to_unitary(M, tol, rtol=1e-6)
    if s is None:
        return None
    W, _ = la.polar(M / s)
    return W


def theorem0_pipeline(U: MultipartiteOperator, tol: Tolerances = DEFAULT_TOL, seed=0) -> ControlledFormCertificate:
    """Fully controlled and diagonal form of a Schmidt-rank-2 unitary.

    Steps: (a) parties whose single-party cut has rank 1 are stripped with
    the unitary they carry; (b) every other party whose Schmidt operators
    have products spanning at most two dimensions gets a common SVD from
    :func:`lemma2_diagonalize`; (c) if the two-term expansion has a
    vanishing cross term, parties whose two factors are proportional to
    unitaries can instead be handled by diagonalizing ``W1† W2``; (d) the one
    remaining target party is multiplied by ``W_a†`` for a block ``W_a`` and
    ``W_a† W_b`` is diagonalized by a unitary similarity.

    Raises :class:`NotRank2` for inputs that are not of Schmidt rank 2 and
    :class:`NumericalFailure` if the final residual exceeds ``tol.residual``.
    """
    if not is_unitary(U.matrix, tol):
        raise NotUnitaryError("input operator is not unitary")
    pe = product_rank2_decompose(U, tol, seed)
    dims = U.dims.dims
    n = len(dims)

    ranks, spans, routes = [], [], {}
    lefts, rights = {}, {}
    no_lemma2 = []
    for a in range(n):
        dec = decompose(U, Cut.single(a, n), tol)
        ranks.append(dec.rank)
        rep = gram_span(dec.left_ops, tol)
        spans.append(rep.dim)
        if dec.rank == 1:
            W, _ = la.polar(dec.left_ops[0])
            lefts[a], rights[a] = W.conj().T, np.eye(dims[a], dtype=complex)
            routes[a] = "stripped"
            continue
        if dec.rank > 2:
            raise NotRank2(f"cut rank {dec.rank} across party {a}", rank=dec.rank)
        if rep.dim <= 2 and rep.contains_identity:
            try:
                ld = lemma2_diagonalize(dec.left_ops, tol)
            except (PreconditionFailed, NumericalFailure):
                no_lemma2.append(a)
                continue
            lefts[a], rights[a] = ld.left, ld.right
            routes[a] = "lemma2:" + ld.branch
        else:
            no_lemma2.append(a)

    vanishing_party, c_const = None, None
    for a in range(n):
        M1, M2 = pe.terms[0][a], pe.terms[1][a]
        scale = np.linalg.norm(M1) * np.linalg.norm(M2)
        if (
            np.linalg.norm(M1.conj().T @ M2) <= tol.residual * scale
            and np.linalg.norm(M2.conj().T @ M1) <= tol.residual * scale
        ):
            vanishing_party = a
            c_const = complex(
                prod(np.linalg.norm(pe.terms[0][b]) ** 2 / dims[b] for b in range(n) if b != a)
            )
            break

    kept = [a for a in range(n) if routes.get(a) != "stripped"]
    if no_lemma2:
        target = no_lemma2[-1]
        for a in no_lemma2[:-1]:
            W1 = _unitary_factor(pe.terms[0][a], tol)
            W2 = _unitary_factor(pe.terms[1][a], tol)
            if W1 is None or W2 is None:
                raise NumericalFailure(
                    f"parties {no_lemma2} admit no local diagonalization; expected at most one"
                )
            S = _similarity_basis(W1.conj().T @ W2, tol)
            lefts[a], rights[a] = S @ W1.conj().T, S
            routes[a] = "similarity"
    else:
        target = kept[-1]
    lefts.pop(target, None)
    rights.pop(target, None)
    routes[target] = "target"
    controls = [a for a in range(n) if a != target]

    U1 = apply_locals(U, lefts, rights, tol)
    blocks, off_block = extract_blocks(U1, controls)
    if off_block > tol.residual:
        raise NumericalFailure(f"control locals leave off-block residual {off_block:.2e}")
    keys = list(blocks)
    blist = [blocks[k] for k in keys]
    if span_dim(blist, tol) != 2:
        raise NotRank2("controlled blocks do not span a two-dimensional space")
    ia, ib = _max_gram_pair(blist)
    Wa, Wb = blist[ia], blist[ib]
    S = _similarity_basis(Wa.conj().T @ Wb, tol)
    TL, TR = S @ Wa.conj().T, S
    # global phase: first diagonal entry equals 1
    first = (TL @ blist[0] @ TR.conj().T)[0, 0]
    TL = TL * np.conj(first / abs(first))
    lefts[target], rights[target] = TL, TR

    branch = BRANCH_GENERIC
    if vanishing_party is not None:
        branch = BRANCH_VANISHING
    elif any(r == "stripped" for r in routes.values()):
        branch = BRANCH_FACTORED
    trace = PipelineTrace(
        schmidt_ranks=ranks,
        span_dims=spans,
        branch=branch,
        routes=dict(sorted(routes.items())),
        vanishing_party=vanishing_party,
        vanishing_constant=c_const,
        sketch_draws=int(pe.notes.get("sketch_draws", 0)),
    )
    cert = certify_locals(U, lefts, rights, controls, target, tol, trace, branch)
    if cert.residual > tol.residual:
        raise NumericalFailure(f"certificate residual {cert.residual:.2e} exceeds {tol.residual:.1e}")
    return cert


def _mu_fit(blocks, ia, ib):
    W1, W2 = blocks[ia], blocks[ib]
    A = np.stack([W1.ravel(), W2.ravel()], axis=1)
    Y = np.stack([W.ravel() for W in blocks], axis=1)
    mu, *_ = la.lstsq(A, Y)
    return mu.T  # row k: (μ_k1, μ_k2)


def quadratic_rows(mu) -> np.ndarray:
    """Coefficients ``(μ1 μ2*, 1 - |μ1|² - |μ2|², μ1* μ2)`` per row of ``mu``.

    Unitarity of ``W_k = μ1 W1 + μ2 W2`` is equivalent to
    ``row[0] I - row[1] N + row[2] N² = 0`` with ``N = W1† W2``.
    """
    mu = np.asarray(mu)
    m1, m2 = mu[:, 0], mu[:, 1]
    return np.stack([m1 * m2.conj(), 1 - abs(m1) ** 2 - abs(m2) ** 2, m1.conj() * m2], axis=1)


def theorem8_bipartite(U: MultipartiteOperator, tol: Tolerances = DEFAULT_TOL, seed=0, control=None) -> Theorem8Result:
    """Two-term controlled form of a bipartite Schmidt-rank-2 unitary.

    Starting from the controlled form with ``control`` as the control party
    (default: the larger party, ties going to the control chosen by
    :func:`theorem0_pipeline`), the blocks are written as
    ``W_k = μ_k1 W1 + μ_k2 W2``.  If some quadratic row is nonzero,
    ``W1† W2`` has exactly two eigenvalues and the other party controls with
    its two eigenprojectors; otherwise each row is a single unimodular entry
    and ``control`` itself controls with two terms after a diagonal phase.
    Certificates with each party as the control are returned as well.
    """
    if U.n_parties != 2:
        raise DimensionError("theorem8_bipartite needs exactly two parties")
    cert = theorem0_pipeline(U, tol, seed)
    dims = U.dims.dims
    lefts, rights = cert.lefts(), cert.rights()
    if control is None:
        if dims[0] != dims[1]:
            control = int(np.argmax(dims))
        else:
            control = cert.control_indices[0]
    c, t = control, 1 - control

    certs = {}
    for p in (0, 1):
        trace = cert.trace if p in cert.control_indices else None
        certs[p] = certify_locals(U, lefts, rights, [p], 1 - p, tol, trace, cert.branch)
        if certs[p].residual > tol.residual:
            raise NumericalFailure(f"party-{p} certificate residual {certs[p].residual:.2e}")

    blist = [certs[c].blocks[(k,)] for k in range(dims[c])]
    ia, ib = _max_gram_pair(blist)
    W1, W2 = blist[ia], blist[ib]
    mu = _mu_fit(blist, ia, ib)
    rows = quadratic_rows(mu)
    nonzero = np.max(np.abs(rows), axis=1) > tol.residual
    Lc, Rc = lefts[c], rights[c]

    if np.any(nonzero):
        branch = "two-eigenvalues"
        S, eig = unitary_similarity_diagonalize(W1.conj().T @ W2, tol)
        labels = cluster_values(eig, tol.eig_cluster)
        if labels.max() + 1 != 2:
            raise ClusterCountMismatch(
                f"W1†W2 has {labels.max() + 1} eigenvalue clusters, expected exactly 2"
            )
        lam = [eig[labels == j].mean() for j in range(2)]
        projs = [S.conj().T @ np.diag((labels == j).astype(float)) @ S for j in range(2)]
        Qs = [np.diag(mu[:, 0] + lam[j] * mu[:, 1]) for j in range(2)]
        two = TwoTermControl(
            control_party=t,
            P1=projs[0],
            P2=projs[1],
            W1=Qs[0],
            W2=Qs[1],
            lefts={c: Lc, t: W1.conj().T},
            rights={c: Rc, t: np.eye(dims[t], dtype=complex)},
            residual=0.0,
            branch=branch,
        )
    else:
        branch = "single-term-rows"
        m = np.argmax(np.abs(mu), axis=1)
        big = np.abs(mu[np.arange(len(m)), m])
        small = np.abs(mu[np.arange(len(m)), 1 - m])
        if np.max(np.abs(big - 1)) > tol.residual or np.max(small) > tol.residual:
            raise NumericalFailure("quadratic rows vanish but μ rows are not single unimodular entries")
        Dg = np.diag(mu[np.arange(len(m)), m].conj() / big)
        projs = [np.diag((m == j).astype(float)).astype(complex) for j in range(2)]
        two = TwoTermControl(
            control_party=c,
            P1=projs[0],
            P2=projs[1],
            W1=W1,
            W2=W2,
            lefts={c: Dg @ Lc},
            rights={c: Rc},
            residual=0.0,
            branch=branch,
        )
        lam, eig, labels = None, None, None

    transformed = apply_locals(U, two.lefts, two.rights, tol)
    two.residual = max(
        float(np.linalg.norm(transformed.matrix - two.canonical(dims), 2)),
        max(unitary_error(two.W1), unitary_error(two.W2)),
        float(np.linalg.norm(two.P1 @ two.P2)),
        float(np.linalg.norm(two.P1 + two.P2 - np.eye(two.P1.shape[0]))),
    )
    if two.residual > tol.residual:
        raise NumericalFailure(f"two-term control residual {two.residual:.2e}")
    for p in certs:
        if certs[p].trace is not None:
            certs[p].trace.mu = mu
            certs[p].trace.quadratic_rows = rows
    return Theorem8Result(
        two_term=two,
        certificates=certs,
        control_party=c,
        branch=branch,
        mu=mu,
        quadratic_rows=rows,
        eigenvalues=eig,
        cluster_labels=labels,
    )
