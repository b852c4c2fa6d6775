"""Independent re-checking of certificates.

Nothing here reuses the pipelines' helpers: full local operators are formed
with ``np.kron`` and block structure is read off with index masks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import prod

import numpy as np

from .core import DEFAULT_TOL, MultipartiteOperator, Tolerances
from .errors import MalformedCertificate

__all__ = ["VerificationReport", "verify_certificate", "verify_two_term"]


@dataclass
class VerificationReport:
    checks: dict = field(default_factory=dict)
    tolerance: float = 0.0

    @property
    def residual(self) -> float:
        return max(self.checks.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def failures(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v <= self.tolerance]

    def __str__(self):
        lines = [f"{k}: {v:.3e}" for k, v in self.checks.items()]
        lines.append(f"{'PASS' if self.passed else 'FAIL'} (residual {self.residual:.3e}, tol {self.tolerance:.1e})")
        return "\n".join(lines)


def _unitary_dev(M):
    return float(np.linalg.norm(M.conj().T @ M - np.eye(M.shape[1]), 2))


def _full_local(dims, per_party):
    return reduce(np.kron, [per_party.get(p, np.eye(d)) for p, d in enumerate(dims)], np.eye(1))


def _square(M, d, what):
    M = np.asarray(M, dtype=complex)
    if M.shape != (d, d):
        raise MalformedCertificate(f"{what} has shape {M.shape}, expected {(d, d)}")
    return M


def verify_certificate(U: MultipartiteOperator, cert, tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """Recompute every claim of a :class:`ControlledFormCertificate`.

    Checks: unitarity of each local, off-block mass after the control
    locals, agreement and unitarity of each stated block, off-diagonal mass
    after all locals, agreement with the stated phases, unimodularity of the
    phases and reconstruction of ``U`` from the diagonal form.  Passes iff
    every check is within ``tol.residual``.
    """
    dims = tuple(U.dims.dims)
    try:
        cdims = tuple(int(d) for d in cert.dims)
        controls = [(int(c.party), c.left, c.right) for c in cert.control_parties]
        target = cert.target_party
        blocks = dict(cert.blocks)
        phases = np.asarray(cert.diagonal_phases, dtype=complex)
    except (AttributeError, TypeError, ValueError) as exc:
        raise MalformedCertificate(f"certificate is missing fields: {exc}") from exc
    if cdims != dims:
        raise MalformedCertificate(f"certificate dims {cdims} do not match operator dims {dims}")
    D = prod(dims)
    if phases.shape != (D,):
        raise MalformedCertificate(f"diagonal_phases has length {phases.size}, expected {D}")
    cparties = [p for p, _, _ in controls]
    if len(set(cparties)) != len(cparties) or any(not 0 <= p < len(dims) for p in cparties):
        raise MalformedCertificate("control parties must be distinct valid party indices")
    if target is not None and (target in cparties or not 0 <= target < len(dims)):
        raise MalformedCertificate("target party is invalid or also listed as a control")

    checks = {}
    lefts, rights = {}, {}
    for p, L, R in controls:
        lefts[p] = _square(L, dims[p], f"left local of party {p}")
        rights[p] = _square(R, dims[p], f"right local of party {p}")
    if target is not None:
        lefts[target] = _square(cert.target_left, dims[target], "target left local")
        rights[target] = _square(cert.target_right, dims[target], "target right local")
    checks["local_unitarity"] = max(
        [_unitary_dev(M) for M in list(lefts.values()) + list(rights.values())], default=0.0
    )

    Lc = _full_local(dims, {p: lefts[p] for p in cparties})
    Rc = _full_local(dims, {p: rights[p] for p in cparties})
    M1 = Lc @ U.matrix @ Rc.conj().T

    # control multi-index of every basis state
    idx = np.array(np.unravel_index(np.arange(D), dims))  # (P, D)
    ctrl = sorted(cparties)
    keys = [tuple(int(v) for v in idx[ctrl, i]) for i in range(D)]
    same = np.array([[ki == kj for kj in keys] for ki in keys])
    checks["off_block"] = float(np.linalg.norm(np.where(same, 0, M1), 2))

    block_err, block_unit = 0.0, 0.0
    expected_keys = sorted(set(keys))
    norm_keys = {tuple(int(v) for v in k): v for k, v in blocks.items()}
    if sorted(norm_keys) != expected_keys:
        raise MalformedCertificate("blocks do not cover the control multi-indices")
    for k in expected_keys:
        sel = np.array([kk == k for kk in keys])
        sub = M1[np.ix_(sel, sel)]
        W = np.asarray(norm_keys[k], dtype=complex)
        if W.shape != sub.shape:
            raise MalformedCertificate(f"block {k} has shape {W.shape}, expected {sub.shape}")
        block_err = max(block_err, float(np.linalg.norm(W - sub, 2)))
        block_unit = max(block_unit, _unitary_dev(W))
    checks["block_agreement"] = block_err
    checks["block_unitarity"] = block_unit

    Lall = _full_local(dims, lefts)
    Rall = _full_local(dims, rights)
    M2 = Lall @ U.matrix @ Rall.conj().T
    checks["off_diagonal"] = float(np.linalg.norm(M2 - np.diag(np.diag(M2)), 2))
    checks["phase_agreement"] = float(np.max(np.abs(np.diag(M2) - phases)))
    checks["phase_modulus"] = float(np.max(np.abs(np.abs(phases) - 1)))
    recon = Lall.conj().T @ np.diag(phases) @ Rall
    checks["reconstruction"] = float(np.linalg.norm(recon - U.matrix, 2))
    return VerificationReport(checks, tol.residual)


def verify_two_term(U: MultipartiteOperator, two, tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """Re-check a bipartite :class:`TwoTermControl` by explicit Kronecker products."""
    dims = tuple(U.dims.dims)
    if len(dims) != 2:
        raise MalformedCertificate("two-term control is defined for two parties")
    c = int(two.control_party)
    P1, P2 = (np.asarray(two.P1, dtype=complex), np.asarray(two.P2, dtype=complex))
    W1, W2 = (np.asarray(two.W1, dtype=complex), np.asarray(two.W2, dtype=complex))
    eye = np.eye(dims[c])
    checks = {
        "projector_product": float(np.linalg.norm(P1 @ P2, 2)),
        "projector_sum": float(np.linalg.norm(P1 + P2 - eye, 2)),
        "projector_idempotence": max(
            float(np.linalg.norm(P1 @ P1 - P1, 2)), float(np.linalg.norm(P1 - P1.conj().T, 2))
        ),
        "term_unitarity": max(_unitary_dev(W1), _unitary_dev(W2)),
    }
    lefts = {int(p): np.asarray(m, dtype=complex) for p, m in two.lefts.items()}
    rights = {int(p): np.asarray(m, dtype=complex) for p, m in two.rights.items()}
    checks["local_unitarity"] = max(
        [_unitary_dev(M) for M in list(lefts.values()) + list(rights.values())], default=0.0
    )
    if c == 0:
        canon = np.kron(P1, W1) + np.kron(P2, W2)
    else:
        canon = np.kron(W1, P1) + np.kron(W2, P2)
    L = _full_local(dims, lefts)
    R = _full_local(dims, rights)
    checks["reconstruction"] = float(np.linalg.norm(L.conj().T @ canon @ R - U.matrix, 2))
    return VerificationReport(checks, tol.residual)
