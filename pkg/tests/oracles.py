"""Reference computations that avoid the package's realignment code.

Schmidt coefficients come from expanding the operator in a tensor product
Pauli basis, which is orthogonal for the Hilbert-Schmidt inner product.
"""

from __future__ import annotations

from functools import reduce
from itertools import product

import numpy as np

PAULI = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]]),
    np.diag([1.0 + 0j, -1.0]),
]


def pauli_basis(n_qubits):
    """Orthonormal basis ``σ_a1 ⊗ ... ⊗ σ_an / 2^(n/2)``."""
    scale = 2.0 ** (-n_qubits / 2)
    return [scale * reduce(np.kron, ops) for ops in product(PAULI, repeat=n_qubits)]


def pauli_schmidt_coefficients(M, n_left, n_right):
    """Schmidt coefficients of a qubit operator across the first ``n_left`` qubits."""
    left, right = pauli_basis(n_left), pauli_basis(n_right)
    C = np.array([[np.vdot(np.kron(a, b), M) for b in right] for a in left])
    s = np.linalg.svd(C, compute_uv=False)
    return s[s > 1e-12 * s[0]]


def cnot_matrix():
    M = np.eye(4, dtype=complex)
    M[2:, 2:] = PAULI[1]
    return M


def swap_matrix():
    return np.eye(4, dtype=complex)[[0, 2, 1, 3]]


def xyz_matrix():
    I, X, Z = PAULI[0], PAULI[1], PAULI[3]
    k3 = lambda A: reduce(np.kron, [A, A, A])
    return (k3(I) + 1j * k3(X) + 1j * k3(Z)) / np.sqrt(3)


def brute_block_diagonal(M, dims, party):
    """Largest entry linking different basis states of ``party``."""
    D = M.shape[0]
    idx = np.unravel_index(np.arange(D), dims)[party]
    mask = idx[:, None] != idx[None, :]
    return float(np.max(np.abs(M[mask]), initial=0.0))
