from functools import reduce

import numpy as np
import pytest

from opschmidt.controlize import build_controlled, theorem0_pipeline
from opschmidt.core import Cut
from opschmidt.detect import (
    CAN_CONTROL,
    UNKNOWN,
    lemma3_check,
    theorem4_check,
    theorem9_scan,
    unitarity_expansion,
)
from opschmidt.errors import DimensionError, PreconditionFailed
from opschmidt.generators import cnot, gen_rank2, gen_rank2_parity, gen_vanishing, haar_unitary, swap, xyz_gate
from opschmidt.verify import verify_certificate

from oracles import brute_block_diagonal


def test_cnot_both_parties_control():
    rep = theorem9_scan(cnot())
    assert rep.can_control == {0, 1}
    assert rep.profile == (2, 2)


@pytest.mark.parametrize("U", [swap(), xyz_gate()], ids=["swap", "xyz"])
def test_counterexamples_have_no_detected_control(U):
    rep = theorem9_scan(U)
    assert rep.can_control == frozenset()
    assert all(v.verdict == UNKNOWN for v in rep.parties)


def test_doubly_controlled_rank_four_instance(rng):
    blocks = {(j, k): haar_unitary(3, rng) for j in range(2) for k in range(2)}
    U = build_controlled((2, 2, 3), blocks, [0, 1])
    rep = theorem9_scan(U)
    assert rep.profile == (2, 2, 4)
    assert rep.can_control == {0, 1}
    assert rep.parties[2].verdict == UNKNOWN


def test_can_control_verdicts_are_constructive():
    U = gen_rank2_parity((2, 3, 2), 5).operator
    rep = theorem9_scan(U)
    for v in rep.parties:
        if v.verdict != CAN_CONTROL:
            continue
        ld = v.diagonalizer
        ops = [np.eye(d) for d in U.dims]
        L, R = list(ops), list(ops)
        L[v.party], R[v.party] = ld.left, ld.right
        M = reduce(np.kron, L) @ U.matrix @ reduce(np.kron, R).conj().T
        assert brute_block_diagonal(M, U.dims.dims, v.party) <= 1e-8


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3), (2, 2, 2), (2, 3, 2), (3, 2, 3), (2, 2, 2, 2)])
def test_rank_two_instances_have_p_minus_one_controls(dims):
    for gen in (gen_rank2, gen_vanishing, gen_rank2_parity):
        U = gen(dims, 1).operator
        assert len(theorem9_scan(U).can_control) >= len(dims) - 1


def test_vanishing_case_with_two_large_parties_is_only_partly_detected():
    # parties 1 and 2 fail the span test but still control via the similarity route
    U = gen_vanishing((2, 3, 3), 0).operator
    rep = theorem9_scan(U)
    assert rep.can_control == {0}
    assert [v.span_dim for v in rep.parties] == [2, 3, 3]
    cert = theorem0_pipeline(U)
    assert verify_certificate(U, cert).passed
    assert len(cert.control_parties) == 2


def test_theorem4_on_cnot_expansion():
    terms, coeffs = unitarity_expansion(cnot(), Cut((0,), 2))
    ok, d1, d2, N = theorem4_check(terms, coeffs)
    assert ok and N == 4 and d1 + d2 <= 5


def test_theorem4_single_term():
    A, B = np.diag([1.0, 2.0]), np.eye(3)
    assert theorem4_check([(A, B)], [2.0]) == (True, 1, 1, 1)


def test_theorem4_preconditions():
    X = np.array([[0, 1], [1, 0]])
    I = np.eye(2)
    with pytest.raises(PreconditionFailed):
        theorem4_check([(I, I), (X, X)], [1, 1])
    with pytest.raises(PreconditionFailed):
        theorem4_check([(I, I)], [0])
    with pytest.raises(DimensionError):
        theorem4_check([(I, I)], [1, 2])


def test_theorem4_on_generated_instances():
    for seed in range(10):
        U = gen_rank2((2, 3, 2), seed).operator
        for a in range(3):
            ok, *_ = theorem4_check(*unitarity_expansion(U, Cut.single(a, 3)))
            assert ok


def test_lemma3_check(rng):
    A = [rng.standard_normal((2, 2)) for _ in range(3)]
    B = [np.eye(2)] * 3
    ok, d_first, d_stacked = lemma3_check(A, B)
    assert ok and d_first == d_stacked == 3
    with pytest.raises(PreconditionFailed):
        lemma3_check(A, [np.eye(2), np.zeros((2, 2)), np.eye(2)])


def test_scan_report_text():
    text = str(theorem9_scan(cnot()))
    assert "party 0" in text and "can_control" in text
