import numpy as np
import pytest

from opschmidt.controlize import (
    build_controlled,
    extract_blocks,
    quadratic_rows,
    theorem0_pipeline,
    theorem8_bipartite,
)
from opschmidt.core import MultipartiteOperator, is_unitary, kron, offdiag_norm
from opschmidt.errors import DimensionError, NotRank2, NotUnitaryError
from opschmidt.generators import cnot, gen_rank2, gen_rank2_parity, gen_vanishing, haar_unitary, swap, xyz_gate
from opschmidt.schmidt import schmidt_rank
from opschmidt.simdiag import span_dim
from opschmidt.verify import verify_certificate, verify_two_term

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_build_controlled_cnot():
    assert build_controlled((2, 2), [I2, X]) == cnot()


def test_build_controlled_identical_blocks_give_product(rng):
    W = haar_unitary(3, rng)
    U = build_controlled((2, 3), [W, W])
    np.testing.assert_allclose(U.matrix, np.kron(I2, W), atol=1e-14)


def test_build_controlled_two_controls_and_locals(rng):
    dims = (2, 2, 3)
    W1, W2 = haar_unitary(3, rng), haar_unitary(3, rng)
    blocks = {(0, 0): W1, (0, 1): W2, (1, 0): W2, (1, 1): W1}
    L = {0: haar_unitary(2, rng), 2: haar_unitary(3, rng)}
    R = {0: haar_unitary(2, rng), 2: haar_unitary(3, rng)}
    U = build_controlled(dims, blocks, [0, 1], {p: (L[p], R[p]) for p in L})
    assert schmidt_rank(U, 2) == 2
    # the locals bring it back to the controlled form
    C = kron([L[0], I2, L[2]]).conj().T @ build_controlled(dims, blocks, [0, 1]).matrix @ kron([R[0], I2, R[2]])
    np.testing.assert_allclose(U.matrix, C, atol=1e-12)


def test_build_controlled_rejects_bad_blocks():
    with pytest.raises(NotUnitaryError):
        build_controlled((2, 2), [I2, 2 * X])
    with pytest.raises(DimensionError):
        build_controlled((2, 2), [I2])
    with pytest.raises(DimensionError):
        build_controlled((2, 2, 2), [I2, X])


def test_extract_blocks_inverts_build(rng):
    blocks = {(k,): haar_unitary(4, rng) for k in range(3)}
    U = build_controlled((3, 2, 2), blocks, [0])
    got, off = extract_blocks(U, [0])
    assert off == 0
    for k in blocks:
        np.testing.assert_allclose(got[k], blocks[k])


def test_theorem0_on_cnot():
    cert = theorem0_pipeline(cnot())
    assert cert.control_indices == [0] and cert.target_party == 1
    assert cert.diagonal_phases[0] == pytest.approx(1)
    np.testing.assert_allclose(sorted(cert.diagonal_phases.real), [-1, 1, 1, 1], atol=1e-12)
    assert verify_certificate(cnot(), cert).passed


def test_theorem0_on_three_party_instance():
    U = gen_rank2((2, 3, 2), 7).operator
    cert = theorem0_pipeline(U)
    assert cert.residual <= 1e-8
    assert len(cert.control_parties) == 2
    assert verify_certificate(U, cert).passed
    assert span_dim(list(cert.blocks.values())) == 2


@pytest.mark.parametrize("U", [swap(), xyz_gate()], ids=["swap", "xyz"])
def test_theorem0_rejects_higher_rank(U):
    with pytest.raises(NotRank2):
        theorem0_pipeline(U)


def test_theorem0_rejects_product_and_non_unitary(rng):
    with pytest.raises(NotRank2):
        theorem0_pipeline(MultipartiteOperator(np.kron(haar_unitary(2, rng), X), (2, 2)))
    with pytest.raises(NotUnitaryError):
        theorem0_pipeline(MultipartiteOperator(2 * np.eye(4), (2, 2)))


def test_theorem0_strips_factored_party(rng):
    H = haar_unitary(3, rng)
    base = gen_rank2_parity((2, 2), 0).operator.matrix
    U = MultipartiteOperator(np.kron(base, H), (2, 2, 3))
    cert = theorem0_pipeline(U)
    assert cert.branch == "party-factored"
    assert cert.trace.routes[2] == "stripped"
    assert verify_certificate(U, cert).passed


def test_theorem0_vanishing_branch_records_constant():
    U = gen_vanishing((2, 3, 3), 3).operator
    cert = theorem0_pipeline(U, seed=3)
    assert cert.residual <= 1e-8
    tr = cert.trace
    assert tr.branch == "vanishing-cross-term"
    assert tr.vanishing_constant is not None and abs(tr.vanishing_constant) > 0
    assert verify_certificate(U, cert).passed


def test_theorem0_idempotent_on_diagonal_input(rng):
    phases = np.exp(2j * np.pi * rng.random(2))
    D = MultipartiteOperator(np.diag([1, 1, phases[0], phases[1]]), (2, 2))
    cert = theorem0_pipeline(D)
    for M in list(cert.lefts().values()) + list(cert.rights().values()):
        assert offdiag_norm(M) < 1e-12
    np.testing.assert_allclose(cert.diagonal_phases, np.diag(D.matrix), atol=1e-12)


def test_trace_matches_recomputation():
    U = gen_rank2_parity((2, 2, 3), 1).operator
    cert = theorem0_pipeline(U)
    assert cert.trace.schmidt_ranks == [2, 2, 2]
    assert cert.trace.branch == cert.branch == "generic"
    assert all(d <= 4 for d in cert.trace.span_dims)


def test_quadratic_rows_vanish_exactly_for_unit_rows():
    rows = quadratic_rows(np.array([[1, 0], [0, 1j]]))
    np.testing.assert_allclose(rows, 0)
    rows = quadratic_rows(np.array([[0.6, 0.8j]]))
    assert np.max(np.abs(rows)) > 0.1


def test_theorem8_cnot_first_party_controls_with_two_terms():
    res = theorem8_bipartite(cnot())
    assert res.branch == "single-term-rows"
    two = res.two_term
    assert two.control_party == 0
    assert verify_two_term(cnot(), two).passed
    for p, cert in res.certificates.items():
        assert cert.control_indices == [p]
        assert verify_certificate(cnot(), cert).passed


@pytest.mark.parametrize("gen", [gen_rank2, gen_vanishing, gen_rank2_parity])
@pytest.mark.parametrize("seed", range(4))
def test_theorem8_random_square_instances(gen, seed):
    U = gen((4, 4), seed).operator
    res = theorem8_bipartite(U, seed=seed)
    assert res.two_term.residual <= 1e-8
    assert verify_two_term(U, res.two_term).passed
    assert all(verify_certificate(U, c).passed for c in res.certificates.values())
    if res.branch == "two-eigenvalues":
        assert res.cluster_labels.max() + 1 == 2
        assert res.two_term.control_party != res.control_party
    else:
        mods = np.sort(np.abs(res.mu), axis=1)
        np.testing.assert_allclose(mods[:, 1], 1, atol=1e-8)
        assert np.all(mods[:, 0] <= 1e-8)


def test_theorem8_both_branches_occur():
    # generic block combinations on the larger party force two eigenvalue clusters;
    # parity blocks are single unitaries
    assert theorem8_bipartite(gen_rank2((3, 2), 0).operator).branch == "two-eigenvalues"
    assert theorem8_bipartite(gen_rank2_parity((3, 2), 0).operator).branch == "single-term-rows"


def test_theorem8_control_override():
    U = gen_rank2((3, 2), 2).operator
    res = theorem8_bipartite(U, control=1)
    assert res.control_party == 1
    assert verify_two_term(U, res.two_term).passed


def test_theorem8_rejects_non_bipartite_and_product(rng):
    with pytest.raises(DimensionError):
        theorem8_bipartite(gen_rank2((2, 2, 2), 0).operator)
    W = haar_unitary(2, rng)
    product = MultipartiteOperator(np.kron(np.diag([1.0, 0]), W) + np.kron(np.diag([0, 1.0]), W), (2, 2))
    with pytest.raises(NotRank2):
        theorem8_bipartite(product)


def test_certificate_blocks_are_unitary():
    U = gen_vanishing((3, 2), 9).operator
    cert = theorem0_pipeline(U)
    assert all(is_unitary(W) for W in cert.blocks.values())
