import json

import numpy as np
import pytest

from opschmidt.controlize import theorem0_pipeline, theorem8_bipartite
from opschmidt.core import MultipartiteOperator, is_unitary
from opschmidt.errors import MalformedCertificate, UopFormatError
from opschmidt.generators import gen_rank2
from opschmidt.io import (
    certificate_from_dict,
    certificate_to_dict,
    format_uop,
    parse_uop,
    read_uop,
    two_term_from_dict,
    two_term_to_dict,
)
from opschmidt.schmidt import schmidt_rank
from opschmidt.verify import verify_certificate, verify_two_term


def test_identity_file():
    text = "UOP 1\n# two qubits\ndims 2 2\n" + "\n".join(
        " ".join("1,0" if i == j else "0,0" for j in range(4)) for i in range(4)
    )
    U = parse_uop(text)
    assert U.dims.dims == (2, 2) and is_unitary(U.matrix)


def test_shipped_cnot_fixture(fixture_path):
    assert schmidt_rank(read_uop(fixture_path("cnot.uop")), 0) == 2


def test_exact_round_trip():
    U = gen_rank2((2, 3), 5).operator
    assert parse_uop(format_uop(U, comment="x\ny")) == U


def test_number_forms_accepted():
    U = parse_uop("UOP 1\ndims 1\n+1.5e-3,-.25\n")
    assert U.matrix[0, 0] == complex(1.5e-3, -0.25)


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("UOP 2\ndims 1\n1,0\n", 1, "header"),
        ("", 1, "empty"),
        ("UOP 1\n", 2, "dims"),
        ("UOP 1\ndim 2\n", 2, "dims"),
        ("UOP 1\ndims 2 x\n", 2, "dimension"),
        ("UOP 1\ndims 2\n1,0 0,0\n0,0 1;0\n", 4, "malformed"),
        ("UOP 1\ndims 2\n1,0 0,0\n0,0\n", 4, "entries"),
        ("UOP 1\ndims 2\n1,0 0,0\n", 3, "rows"),
        ("UOP 1\ndims 1\n1,0\n1,0\n", 4, "extra"),
        ("UOP 1\ndims 1\nnan,0\n", 3, "malformed"),
    ],
)
def test_parse_errors_report_location(text, line, fragment):
    with pytest.raises(UopFormatError) as err:
        parse_uop(text)
    assert err.value.line == line
    assert fragment in str(err.value)


def test_fifteen_entries_for_four_by_four():
    rows = ["1,0 0,0 0,0 0,0"] * 3 + ["1,0 0,0 0,0"]
    with pytest.raises(UopFormatError) as err:
        parse_uop("UOP 1\ndims 2 2\n" + "\n".join(rows) + "\n")
    assert err.value.line == 6


def test_certificate_json_round_trip():
    U = gen_rank2((2, 3, 2), 2).operator
    cert = theorem0_pipeline(U)
    doc = json.loads(json.dumps(certificate_to_dict(cert)))
    back = certificate_from_dict(doc)
    assert verify_certificate(U, back).passed
    assert back.trace.routes == cert.trace.routes
    assert back.blocks.keys() == cert.blocks.keys()


def test_two_term_json_round_trip():
    U = gen_rank2((3, 2), 4).operator
    two = theorem8_bipartite(U).two_term
    back = two_term_from_dict(json.loads(json.dumps(two_term_to_dict(two))))
    assert verify_two_term(U, back).passed


def test_malformed_certificate_documents():
    with pytest.raises(MalformedCertificate):
        certificate_from_dict([])
    with pytest.raises(MalformedCertificate):
        certificate_from_dict({"dims": [2, 2]})
    doc = certificate_to_dict(theorem0_pipeline(MultipartiteOperator(np.diag([1, 1, 1, -1]), (2, 2))))
    doc["diagonal_phases"] = [[1, 0, 0]]
    with pytest.raises(MalformedCertificate):
        certificate_from_dict(doc)
