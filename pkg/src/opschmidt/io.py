"""UOP text format and certificate JSON.

UOP layout::

    UOP 1
    dims 2 2
    1,0 0,0 0,0 0,0
    ...

Each of the ``D`` matrix rows holds ``D`` whitespace-separated ``re,im``
tokens.  Lines starting with ``#`` (after optional whitespace) and blank
lines are ignored.  Numbers are written with 17 significant digits so
doubles round-trip exactly.
"""

from __future__ import annotations

import json
import re
import sys
from math import prod

import numpy as np

from .controlize import ControlledFormCertificate, ControlParty, PipelineTrace, TwoTermControl
from .core import MultipartiteOperator, Tolerances
from .errors import MalformedCertificate, UopFormatError

__all__ = [
    "parse_uop",
    "format_uop",
    "read_uop",
    "write_uop",
    "certificate_to_dict",
    "certificate_from_dict",
    "two_term_to_dict",
    "two_term_from_dict",
    "dumps_document",
]

MAGIC = "UOP 1"
_FLOAT = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TOKEN = re.compile(rf"({_FLOAT}),({_FLOAT})")


def parse_uop(text: str) -> MultipartiteOperator:
    lines = [(i + 1, raw) for i, raw in enumerate(text.splitlines())]
    content = [(n, s) for n, s in lines if s.strip() and not s.lstrip().startswith("#")]
    if not content:
        raise UopFormatError("empty file; expected 'UOP 1' header", line=1)
    n, head = content[0]
    if head.strip() != MAGIC:
        raise UopFormatError(f"bad header {head.strip()!r}; expected {MAGIC!r}", line=n, column=1)
    if len(content) < 2:
        raise UopFormatError("missing 'dims' line", line=n + 1)
    n, dline = content[1]
    parts = dline.split()
    if not parts or parts[0] != "dims" or len(parts) < 2:
        raise UopFormatError("expected 'dims d1 d2 ...'", line=n, column=1)
    dims = []
    for tok in parts[1:]:
        if not tok.isdigit() or int(tok) < 1:
            raise UopFormatError(f"bad dimension {tok!r}", line=n, column=dline.index(tok) + 1)
        dims.append(int(tok))
    D = prod(dims)
    rows = content[2:]
    M = np.empty((D, D), dtype=complex)
    for r, (n, s) in enumerate(rows):
        if r >= D:
            raise UopFormatError(f"extra row; dims {dims} give {D} rows", line=n, column=1)
        tokens = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", s)]
        if len(tokens) != D:
            col = tokens[D][0] if len(tokens) > D else len(s) + 1
            raise UopFormatError(f"row has {len(tokens)} entries, expected {D}", line=n, column=col)
        for c, (col, tok) in enumerate(tokens):
            m = _TOKEN.fullmatch(tok)
            if m is None:
                raise UopFormatError(f"malformed entry {tok!r}; expected 're,im'", line=n, column=col)
            M[r, c] = complex(float(m.group(1)), float(m.group(2)))
    if len(rows) < D:
        last = lines[-1][0] if lines else 1
        raise UopFormatError(f"found {len(rows)} rows, expected {D}", line=last)
    return MultipartiteOperator(M, dims)


def _num(x: float) -> str:
    return format(float(x), ".17g")


def format_uop(U: MultipartiteOperator, comment: str | None = None) -> str:
    out = [MAGIC]
    if comment:
        out.extend("# " + c for c in comment.splitlines())
    out.append("dims " + " ".join(str(d) for d in U.dims))
    for row in U.matrix:
        out.append(" ".join(f"{_num(z.real)},{_num(z.imag)}" for z in row))
    return "\n".join(out) + "\n"


def read_uop(path) -> MultipartiteOperator:
    """Read from a path, or from stdin when ``path`` is ``"-"``."""
    if str(path) == "-":
        return parse_uop(sys.stdin.read())
    with open(path, encoding="utf-8") as fh:
        return parse_uop(fh.read())


def write_uop(U: MultipartiteOperator, path, comment: str | None = None) -> None:
    text = format_uop(U, comment)
    if str(path) == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _mat(M):
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _vec(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def _unmat(obj, what):
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedCertificate(f"{what}: not a numeric array") from exc
    if a.ndim != 3 or a.shape[2] != 2 or a.shape[0] != a.shape[1]:
        raise MalformedCertificate(f"{what}: expected a square array of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def _unvec(obj, what):
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedCertificate(f"{what}: not a numeric array") from exc
    if a.ndim != 2 or a.shape[1] != 2:
        raise MalformedCertificate(f"{what}: expected a list of [re, im] pairs")
    return a[:, 0] + 1j * a[:, 1]


def _trace_to_dict(tr: PipelineTrace | None):
    if tr is None:
        return None
    out = {
        "schmidt_ranks": [int(r) for r in tr.schmidt_ranks],
        "span_dims": [int(d) for d in tr.span_dims],
        "branch": tr.branch,
        "routes": {str(k): v for k, v in tr.routes.items()},
        "vanishing_party": tr.vanishing_party,
        "vanishing_constant": None if tr.vanishing_constant is None else _vec([tr.vanishing_constant])[0],
        "sketch_draws": int(tr.sketch_draws),
    }
    if tr.mu is not None:
        out["mu"] = [_vec(row) for row in tr.mu]
        out["quadratic_rows"] = [_vec(row) for row in tr.quadratic_rows]
    return out


def _trace_from_dict(d):
    if d is None:
        return None
    vc = d.get("vanishing_constant")
    mu = d.get("mu")
    return PipelineTrace(
        schmidt_ranks=list(d.get("schmidt_ranks", [])),
        span_dims=list(d.get("span_dims", [])),
        branch=d.get("branch", ""),
        routes={int(k): v for k, v in d.get("routes", {}).items()},
        vanishing_party=d.get("vanishing_party"),
        vanishing_constant=None if vc is None else complex(vc[0], vc[1]),
        sketch_draws=int(d.get("sketch_draws", 0)),
        mu=None if mu is None else np.array([_unvec(r, "mu") for r in mu]),
        quadratic_rows=None
        if mu is None
        else np.array([_unvec(r, "quadratic_rows") for r in d["quadratic_rows"]]),
    )


def certificate_to_dict(cert: ControlledFormCertificate, tol: Tolerances | None = None) -> dict:
    out = {
        "dims": [int(d) for d in cert.dims],
        "branch": cert.branch,
        "control_parties": [
            {"party": int(c.party), "left": _mat(c.left), "right": _mat(c.right)} for c in cert.control_parties
        ],
        "target_party": cert.target_party,
        "target_left": None if cert.target_left is None else _mat(cert.target_left),
        "target_right": None if cert.target_right is None else _mat(cert.target_right),
        "blocks": [{"index": [int(i) for i in k], "matrix": _mat(W)} for k, W in sorted(cert.blocks.items())],
        "diagonal_phases": _vec(cert.diagonal_phases),
        "residual": float(cert.residual),
    }
    if tol is not None:
        out["tolerances"] = {"rank_cut": tol.rank_cut, "residual": tol.residual, "eig_cluster": tol.eig_cluster}
    out["trace"] = _trace_to_dict(cert.trace)
    return out


def certificate_from_dict(d: dict) -> ControlledFormCertificate:
    if not isinstance(d, dict):
        raise MalformedCertificate("certificate must be a JSON object")
    try:
        target = d["target_party"]
        cert = ControlledFormCertificate(
            dims=tuple(int(x) for x in d["dims"]),
            control_parties=[
                ControlParty(int(c["party"]), _unmat(c["left"], "left"), _unmat(c["right"], "right"))
                for c in d["control_parties"]
            ],
            target_party=None if target is None else int(target),
            target_left=None if target is None else _unmat(d["target_left"], "target_left"),
            target_right=None if target is None else _unmat(d["target_right"], "target_right"),
            blocks={tuple(int(i) for i in b["index"]): _unmat(b["matrix"], "block") for b in d["blocks"]},
            diagonal_phases=_unvec(d["diagonal_phases"], "diagonal_phases"),
            residual=float(d["residual"]),
            branch=str(d.get("branch", "")),
            trace=_trace_from_dict(d.get("trace")),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedCertificate(f"missing or invalid field: {exc}") from exc
    return cert


def two_term_to_dict(two: TwoTermControl) -> dict:
    return {
        "control_party": int(two.control_party),
        "branch": two.branch,
        "P1": _mat(two.P1),
        "P2": _mat(two.P2),
        "W1": _mat(two.W1),
        "W2": _mat(two.W2),
        "lefts": [{"party": int(p), "matrix": _mat(m)} for p, m in sorted(two.lefts.items())],
        "rights": [{"party": int(p), "matrix": _mat(m)} for p, m in sorted(two.rights.items())],
        "residual": float(two.residual),
    }


def two_term_from_dict(d: dict) -> TwoTermControl:
    try:
        return TwoTermControl(
            control_party=int(d["control_party"]),
            P1=_unmat(d["P1"], "P1"),
            P2=_unmat(d["P2"], "P2"),
            W1=_unmat(d["W1"], "W1"),
            W2=_unmat(d["W2"], "W2"),
            lefts={int(e["party"]): _unmat(e["matrix"], "left") for e in d["lefts"]},
            rights={int(e["party"]): _unmat(e["matrix"], "right") for e in d["rights"]},
            residual=float(d["residual"]),
            branch=str(d.get("branch", "")),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedCertificate(f"two-term report: missing or invalid field: {exc}") from exc


def dumps_document(doc: dict) -> str:
    return json.dumps(doc, indent=1) + "\n"
