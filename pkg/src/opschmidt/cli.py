"""``opschmidt`` command-line interface.

Exit codes: 0 success or verified, 1 negative decision (not Schmidt rank 2,
verification failed), 2 input or format error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .controlize import theorem0_pipeline, theorem8_bipartite
from .core import Cut, Tolerances
from .detect import theorem9_scan
from .errors import (
    DimensionError,
    MalformedCertificate,
    NotRank2,
    NotUnitaryError,
    NumericalFailure,
    PreconditionFailed,
    UopFormatError,
)
from .generators import GeneratorSpec, generate
from .io import (
    certificate_from_dict,
    certificate_to_dict,
    dumps_document,
    format_uop,
    parse_uop,
    read_uop,
    two_term_from_dict,
    two_term_to_dict,
    write_uop,
)
from .schmidt import decompose
from .verify import verify_certificate, verify_two_term

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

FAMILY_ALIASES = {
    "rank2": "rank2_generic",
    "vanishing": "rank2_vanishing",
    "parity": "rank2_parity",
    "xyz": "counterexample_xyz",
    "scramble": "haar_local_scramble",
}


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _global_flags(parser, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--tol", type=float, default=d(1e-8), help="residual tolerance (default 1e-8)")
    parser.add_argument("--seed", type=int, default=d(0), help="seed for randomized steps (default 0)")
    parser.add_argument("--quiet", action="store_true", default=d(False), help="print only essential output")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opschmidt", description="Operator Schmidt rank 2 tools")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(p, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rank", parents=[common], help="Schmidt coefficients and rank")
    r.add_argument("file", help="UOP file or - for stdin")
    r.add_argument("--cut", type=_int_list, help="parties on the left of the cut, e.g. 0,2")

    c = sub.add_parser("controlize", parents=[common], help="certify controlled and diagonal form")
    c.add_argument("file", nargs="?", default="-")
    c.add_argument("-o", "--output", default="-", help="certificate JSON path (default stdout)")

    d = sub.add_parser("detect", parents=[common], help="per-party control scan")
    d.add_argument("file", nargs="?", default="-")

    g = sub.add_parser("gen", parents=[common], help="generate an instance")
    g.add_argument("family", help="rank2, vanishing, parity, xyz, swap, cnot or scramble")
    g.add_argument("--dims", type=_int_list, default=[2, 2])
    g.add_argument("-o", "--output", default="-")

    v = sub.add_parser("verify", parents=[common], help="re-check a certificate")
    v.add_argument(
        "paths",
        nargs="+",
        metavar="FILE",
        help="[input.uop] cert.json; with one path the certificate's embedded input is used",
    )
    return p


def _log(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr)


def _write_text(path, text):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _read_text(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _tol(args):
    return Tolerances(residual=args.tol)


def cmd_rank(args):
    U = read_uop(args.file)
    n = U.n_parties
    cuts = [Cut(tuple(args.cut), n)] if args.cut else [Cut.single(a, n) for a in range(n if n > 2 else 1)]
    for cut in cuts:
        dec = decompose(U, cut, _tol(args))
        if args.quiet:
            print(dec.rank)
            continue
        print(f"cut {cut}")
        print(f"rank {dec.rank}")
        print("coefficients " + " ".join(format(float(x), ".12g") for x in dec.coeffs))
    return EXIT_OK


def cmd_controlize(args):
    U = read_uop(args.file)
    tol = _tol(args)
    cert = theorem0_pipeline(U, tol, args.seed)
    doc = {"format": "opschmidt-certificate", "version": 1}
    doc.update(certificate_to_dict(cert, tol))
    if U.n_parties == 2:
        res = theorem8_bipartite(U, tol, args.seed)
        doc["two_term"] = two_term_to_dict(res.two_term)
        doc["alternate_certificates"] = [
            certificate_to_dict(c, tol)
            for p, c in sorted(res.certificates.items())
            if p != cert.control_indices[0]
        ]
    doc["input"] = format_uop(U)
    _write_text(args.output, dumps_document(doc))
    _log(args, f"certified: controls {cert.control_indices}, target {cert.target_party}, "
               f"branch {cert.branch}, residual {cert.residual:.2e}")
    return EXIT_OK


def cmd_detect(args):
    U = read_uop(args.file)
    report = theorem9_scan(U, _tol(args))
    if args.quiet:
        print(" ".join(str(p) for p in sorted(report.can_control)))
    else:
        print(report)
    return EXIT_OK


def cmd_gen(args):
    family = FAMILY_ALIASES.get(args.family, args.family)
    try:
        spec = GeneratorSpec(family, tuple(args.dims), args.seed)
    except ValueError as exc:
        raise DimensionError(str(exc)) from exc
    inst = generate(spec)
    write_uop(inst.operator, args.output, comment=f"family {family} dims {','.join(map(str, spec.dims))} seed {spec.seed}")
    return EXIT_OK


def cmd_verify(args):
    if len(args.paths) > 2:
        raise DimensionError("verify takes at most two paths")
    cert_path = args.paths[-1]
    try:
        doc = json.loads(_read_text(cert_path))
    except json.JSONDecodeError as exc:
        raise MalformedCertificate(f"{cert_path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise MalformedCertificate("certificate must be a JSON object")
    if len(args.paths) == 2:
        U = read_uop(args.paths[0])
    elif "input" in doc:
        U = parse_uop(doc["input"])
    else:
        raise MalformedCertificate("certificate has no embedded input; pass the UOP file too")
    # a certificate is checked against the tolerances it was issued with
    try:
        tol = Tolerances(**doc["tolerances"]) if "tolerances" in doc else _tol(args)
    except TypeError as exc:
        raise MalformedCertificate(f"bad tolerances entry: {exc}") from exc
    reports = [("certificate", verify_certificate(U, certificate_from_dict(doc), tol))]
    for i, alt in enumerate(doc.get("alternate_certificates", [])):
        reports.append((f"alternate certificate {i}", verify_certificate(U, certificate_from_dict(alt), tol)))
    if "two_term" in doc:
        reports.append(("two-term control", verify_two_term(U, two_term_from_dict(doc["two_term"]), tol)))
    ok = all(r.passed for _, r in reports)
    for name, r in reports:
        if args.quiet:
            continue
        print(f"[{name}]")
        print(r)
    print("VERIFIED" if ok else "FAILED")
    return EXIT_OK if ok else EXIT_NEGATIVE


COMMANDS = {
    "rank": cmd_rank,
    "controlize": cmd_controlize,
    "detect": cmd_detect,
    "gen": cmd_gen,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NotRank2 as exc:
        print(f"NotRank2: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except (UopFormatError, MalformedCertificate, DimensionError, NotUnitaryError, PreconditionFailed) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
