import numpy as np
import pytest

from opschmidt.core import (
    Cut,
    MultipartiteOperator,
    PartyDims,
    Tolerances,
    apply_locals,
    cluster_values,
    hs_inner,
    is_unitary,
    join_cut,
    kron,
    offdiag_norm,
    proportional_to_unitary,
    reshuffle,
    unitary_similarity_diagonalize,
    unreshuffle,
)
from opschmidt.errors import DimensionError, NotUnitaryError
from opschmidt.generators import haar_unitary

from oracles import cnot_matrix


def test_party_dims_validation():
    assert PartyDims((2, 3)).total == 6
    with pytest.raises(DimensionError):
        PartyDims(())
    with pytest.raises(DimensionError):
        PartyDims((2, 0))


def test_operator_shape_checks_and_immutability():
    with pytest.raises(DimensionError):
        MultipartiteOperator(np.eye(5), (2, 2))
    with pytest.raises(DimensionError):
        MultipartiteOperator(np.zeros((4, 2)), (2, 2))
    src = np.eye(4)
    U = MultipartiteOperator(src, (2, 2))
    src[0, 0] = 7
    assert U.matrix[0, 0] == 1
    with pytest.raises(ValueError):
        U.matrix[0, 0] = 2


def test_tolerances_must_be_positive():
    with pytest.raises(ValueError):
        Tolerances(residual=0)
    with pytest.raises(ValueError):
        Tolerances(rank_cut=1.5)


def test_cut_normalizes_and_rejects_trivial_cuts():
    cut = Cut((2, 0, 2), 3)
    assert cut.left == (0, 2) and cut.right == (1,)
    assert str(cut) == "{0,2}|{1}"
    assert cut.complement().left == (1,)
    with pytest.raises(DimensionError):
        Cut((), 2)
    with pytest.raises(DimensionError):
        Cut((0, 1), 2)
    with pytest.raises(DimensionError):
        Cut((3,), 2)


def test_kron_matches_numpy_order():
    a, b, c = np.diag([1, 2]), np.diag([1, 10, 100]), np.diag([1, -1])
    np.testing.assert_array_equal(kron([a, b, c]), np.kron(np.kron(a, b), c))
    with pytest.raises(DimensionError):
        kron([np.ones((2, 3))])


def test_apply_locals_equals_explicit_kron(rng):
    dims = (2, 3, 2)
    M = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    U = MultipartiteOperator(M, dims)
    L = [haar_unitary(d, rng) for d in dims]
    R = [haar_unitary(d, rng) for d in dims]
    got = apply_locals(U, L, R).matrix
    np.testing.assert_allclose(got, kron(L) @ M @ kron(R).conj().T, atol=1e-12)
    # mapping form, identity elsewhere
    got = apply_locals(U, {1: L[1]}, None).matrix
    np.testing.assert_allclose(got, kron([np.eye(2), L[1], np.eye(2)]) @ M, atol=1e-12)


def test_apply_locals_rejects_bad_locals():
    U = MultipartiteOperator(np.eye(4), (2, 2))
    with pytest.raises(NotUnitaryError):
        apply_locals(U, {0: 2 * np.eye(2)})
    with pytest.raises(DimensionError):
        apply_locals(U, {0: np.eye(3)})
    with pytest.raises(DimensionError):
        apply_locals(U, [np.eye(2)])


def test_reshuffle_of_product_is_rank_one(rng):
    A = rng.standard_normal((2, 2))
    B = rng.standard_normal((3, 3))
    U = MultipartiteOperator(np.kron(A, B), (2, 3))
    R = reshuffle(U, Cut((0,), 2))
    np.testing.assert_allclose(R, np.outer(A.ravel(), B.ravel()), atol=1e-14)


def test_reshuffle_round_trip_noncontiguous_cut(rng):
    dims = (2, 3, 2)
    M = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    U = MultipartiteOperator(M, dims)
    cut = Cut((0, 2), 3)
    assert reshuffle(U, cut).shape == (16, 9)
    assert unreshuffle(reshuffle(U, cut), dims, cut) == U


def test_join_cut_places_factors(rng):
    A = rng.standard_normal((4, 4))  # on parties 0 and 2
    B = rng.standard_normal((3, 3))
    full = join_cut(A, B, (2, 3, 2), Cut((0, 2), 3))
    R = reshuffle(MultipartiteOperator(full, (2, 3, 2)), Cut((0, 2), 3))
    np.testing.assert_allclose(R, np.outer(A.ravel(), B.ravel()), atol=1e-14)


def test_hs_inner_and_unitarity():
    X = np.array([[0, 1], [1, 0]])
    Z = np.diag([1, -1])
    assert hs_inner(X, Z) == 0
    assert hs_inner(X, X) == 2
    assert is_unitary(cnot_matrix())
    assert not is_unitary(np.diag([1, 1 + 1e-6]))
    assert not is_unitary(np.ones((2, 3)))
    assert offdiag_norm(np.array([[1, 3], [4, 2]])) == pytest.approx(5.0)


def test_proportional_to_unitary(rng):
    U, V = haar_unitary(3, rng), haar_unitary(3, rng)
    s = proportional_to_unitary(3 * np.exp(1j * np.pi / 7) * U @ V)
    assert abs(s) == pytest.approx(3, abs=1e-10)
    W = 3 * np.exp(1j * np.pi / 7) * U @ V / s
    assert is_unitary(W)
    assert proportional_to_unitary(np.diag([1.0, 0.5])) is None
    with pytest.raises(ValueError):
        proportional_to_unitary(np.zeros((2, 2)))


def test_cluster_values_single_linkage_chain():
    labels = cluster_values([0, 0.5e-7, 1e-7, 1.0, 1 + 1e-8], 0.6e-7)
    assert list(labels) == [0, 0, 0, 1, 1]


def test_similarity_diagonalize_groups_degenerate_eigenvalues(rng):
    Q = haar_unitary(4, rng)
    ev = np.exp(1j * np.array([2.0, 0.5, 2.0, 0.5]))
    N = Q @ np.diag(ev) @ Q.conj().T
    S, eig = unitary_similarity_diagonalize(N)
    assert is_unitary(S)
    assert offdiag_norm(S @ N @ S.conj().T) < 1e-12
    np.testing.assert_allclose(eig, np.exp(1j * np.array([0.5, 0.5, 2.0, 2.0])), atol=1e-12)


def test_similarity_diagonalize_rejects_non_normal():
    with pytest.raises(ValueError):
        unitary_similarity_diagonalize(np.array([[1.0, 1.0], [0.0, 1.0]]))
