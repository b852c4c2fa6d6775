"""Seeded instance generators and named fixtures.

All generators draw from ``numpy.random.default_rng(seed)`` in a fixed
order, so equal arguments give bit-identical matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np
import scipy.linalg as la

from .core import Cut, MultipartiteOperator, PartyDims, apply_locals, kron
from .errors import DimensionError
from .schmidt import schmidt_rank

__all__ = [
    "FAMILIES",
    "GeneratorSpec",
    "GeneratedInstance",
    "haar_unitary",
    "random_diagonal_unitary",
    "haar_local_scramble",
    "gen_rank2",
    "gen_vanishing",
    "gen_rank2_parity",
    "gen_counterexamples",
    "cnot",
    "swap",
    "xyz_gate",
    "generate",
]

FAMILIES = (
    "rank2_generic",
    "rank2_vanishing",
    "rank2_parity",
    "counterexample_xyz",
    "swap",
    "cnot",
    "haar_local_scramble",
)
MAX_REDRAWS = 100

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``d x d`` unitary (QR with diagonal phase correction)."""
    g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = la.qr(g)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_diagonal_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * rng.random(d)))


def _random_split(d: int, rng: np.random.Generator) -> np.ndarray:
    """Boolean mask of a uniformly drawn nontrivial bipartition of ``range(d)``."""
    if d < 2:
        raise DimensionError("a projector split needs dimension >= 2")
    # integers in [1, 2**d - 2] are exactly the nonempty proper subsets
    code = int(rng.integers(1, 2**d - 1))
    return np.array([(code >> i) & 1 for i in range(d)], dtype=bool)


@dataclass
class GeneratedInstance:
    """A generated operator with the ingredients used to build it.

    ``operator = (⊗ lefts) canonical (⊗ rights)``.
    """

    operator: MultipartiteOperator
    canonical: MultipartiteOperator
    lefts: list = field(default_factory=list)
    rights: list = field(default_factory=list)
    redraws: int = 0
    family: str = ""


def haar_local_scramble(U: MultipartiteOperator, seed) -> GeneratedInstance:
    """Multiply ``U`` by independent Haar local unitaries on both sides."""
    rng = np.random.default_rng(seed)
    return _scramble(U, rng, "haar_local_scramble")


def _scramble(U0, rng, family, redraws=0):
    dims = U0.dims.dims
    lefts = [haar_unitary(d, rng) for d in dims]
    rights = [haar_unitary(d, rng) for d in dims]
    # apply_locals computes (⊗L) U (⊗R)†; store the factor that multiplies on the right
    U = apply_locals(U0, lefts, [r.conj().T for r in rights])
    return GeneratedInstance(U, U0, lefts, rights, redraws, family)


def _all_cuts_rank2(U: MultipartiteOperator) -> bool:
    n = U.n_parties
    return all(schmidt_rank(U, Cut.single(a, n)) == 2 for a in range(n))


def gen_rank2(dims, seed, scramble: bool = True) -> GeneratedInstance:
    """Diagonal rank-2 instance ``D1 ⊗ Q1 + D2 ⊗ Q2`` scrambled by Haar locals.

    ``D1``, ``D2`` are products of random diagonal unitaries on all parties
    but the last, and ``Q1 + Q2 = I`` is a random nontrivial split of the
    last party's basis.
    """
    dims = PartyDims.coerce(dims).dims
    if len(dims) < 2:
        raise DimensionError("gen_rank2 needs at least two parties")
    if dims[-1] < 2:
        raise DimensionError("the last party needs dimension >= 2 to split a projector")
    rng = np.random.default_rng(seed)
    for redraws in range(MAX_REDRAWS):
        D1 = kron([random_diagonal_unitary(d, rng) for d in dims[:-1]])
        D2 = kron([random_diagonal_unitary(d, rng) for d in dims[:-1]])
        mask = _random_split(dims[-1], rng)
        Q1 = np.diag(mask.astype(float))
        Q2 = np.eye(dims[-1]) - Q1
        U0 = MultipartiteOperator(np.kron(D1, Q1) + np.kron(D2, Q2), dims)
        if _all_cuts_rank2(U0):
            break
    else:  # pragma: no cover - needs a degenerate draw every time
        raise RuntimeError("gen_rank2 exhausted its redraw budget")
    if not scramble:
        return GeneratedInstance(U0, U0, redraws=redraws, family="rank2_generic")
    return _scramble(U0, rng, "rank2_generic", redraws)


def gen_vanishing(dims, seed, scramble: bool = True) -> GeneratedInstance:
    """``P0 ⊗ V + P1 ⊗ V'`` with ``P0 + P1 = I`` on party 0 and Haar products ``V``, ``V'``."""
    dims = PartyDims.coerce(dims).dims
    if len(dims) < 2:
        raise DimensionError("gen_vanishing needs at least two parties")
    if dims[0] < 2:
        raise DimensionError("party 0 needs dimension >= 2")
    rng = np.random.default_rng(seed)
    for redraws in range(MAX_REDRAWS):
        mask = _random_split(dims[0], rng)
        P0 = np.diag(mask.astype(float))
        P1 = np.eye(dims[0]) - P0
        V = kron([haar_unitary(d, rng) for d in dims[1:]])
        W = kron([haar_unitary(d, rng) for d in dims[1:]])
        U0 = MultipartiteOperator(np.kron(P0, V) + np.kron(P1, W), dims)
        if _all_cuts_rank2(U0):
            break
    else:  # pragma: no cover
        raise RuntimeError("gen_vanishing exhausted its redraw budget")
    if not scramble:
        return GeneratedInstance(U0, U0, redraws=redraws, family="rank2_vanishing")
    return _scramble(U0, rng, "rank2_vanishing", redraws)


def gen_rank2_parity(dims, seed, scramble: bool = True) -> GeneratedInstance:
    """Parity-controlled instance with no vanishing cross term.

    ``Π+ ⊗ W1 + Π- ⊗ W2`` where ``Π± = (I ± H)/2`` and ``H`` is a product
    of random diagonal ``±1`` matrices (neither ``I`` nor ``-I``) on all
    parties but the last; ``W1``, ``W2`` are Haar unitaries on the last party.
    """
    dims = PartyDims.coerce(dims).dims
    if len(dims) < 2:
        raise DimensionError("gen_rank2_parity needs at least two parties")
    if any(d < 2 for d in dims):
        raise DimensionError("every party needs dimension >= 2")
    rng = np.random.default_rng(seed)
    for redraws in range(MAX_REDRAWS):
        H = kron([np.diag(np.where(_random_split(d, rng), 1.0, -1.0)) for d in dims[:-1]])
        I = np.eye(H.shape[0])
        W1, W2 = haar_unitary(dims[-1], rng), haar_unitary(dims[-1], rng)
        U0 = MultipartiteOperator(np.kron((I + H) / 2, W1) + np.kron((I - H) / 2, W2), dims)
        if _all_cuts_rank2(U0):
            break
    else:  # pragma: no cover
        raise RuntimeError("gen_rank2_parity exhausted its redraw budget")
    if not scramble:
        return GeneratedInstance(U0, U0, redraws=redraws, family="rank2_parity")
    return _scramble(U0, rng, "rank2_parity", redraws)


def cnot() -> MultipartiteOperator:
    M = np.eye(4, dtype=complex)
    M[2:, 2:] = X
    return MultipartiteOperator(M, (2, 2))


def swap() -> MultipartiteOperator:
    M = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
    return MultipartiteOperator(M, (2, 2))


def xyz_gate() -> MultipartiteOperator:
    """``(I⊗I⊗I + i X⊗X⊗X + i Z⊗Z⊗Z)/√3``: unitary, rank 3 on every single-party cut."""
    I2 = np.eye(2)
    M = (kron([I2] * 3) + 1j * kron([X] * 3) + 1j * kron([Z] * 3)) / np.sqrt(3)
    return MultipartiteOperator(M, (2, 2, 2))


def gen_counterexamples() -> dict:
    return {"xyz": xyz_gate(), "swap": swap()}


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    dims: tuple = (2, 2)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        object.__setattr__(self, "dims", PartyDims.coerce(self.dims).dims)


def generate(spec: GeneratorSpec) -> GeneratedInstance:
    """Instance for ``spec``; fixed fixtures ignore ``dims`` and ``seed``.

    ``haar_local_scramble`` returns a random product unitary (the identity
    scrambled by Haar locals).
    """
    fam = spec.family
    if fam == "rank2_generic":
        return gen_rank2(spec.dims, spec.seed)
    if fam == "rank2_vanishing":
        return gen_vanishing(spec.dims, spec.seed)
    if fam == "rank2_parity":
        return gen_rank2_parity(spec.dims, spec.seed)
    if fam == "haar_local_scramble":
        eye = MultipartiteOperator(np.eye(prod(spec.dims)), spec.dims)
        return haar_local_scramble(eye, spec.seed)
    fixed = {"counterexample_xyz": xyz_gate, "swap": swap, "cnot": cnot}[fam]()
    return GeneratedInstance(fixed, fixed, family=fam)
