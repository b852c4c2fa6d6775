"""Operator Schmidt decompositions and controlled forms of rank-2 unitaries."""

from .controlize import (
    ControlledFormCertificate,
    ControlParty,
    PipelineTrace,
    Theorem8Result,
    TwoTermControl,
    build_controlled,
    theorem0_pipeline,
    theorem8_bipartite,
)
from .core import (
    DEFAULT_TOL,
    Cut,
    MultipartiteOperator,
    PartyDims,
    Tolerances,
    apply_locals,
    hs_inner,
    is_unitary,
    kron,
    proportional_to_unitary,
    reshuffle,
    unitary_similarity_diagonalize,
)
from .detect import ControlScanReport, lemma3_check, theorem4_check, theorem9_scan, unitarity_expansion
from .errors import (
    ClusterCountMismatch,
    DimensionError,
    MalformedCertificate,
    NotRank2,
    NotUnitaryError,
    NumericalFailure,
    OpSchmidtError,
    PreconditionFailed,
    UopFormatError,
)
from .generators import (
    GeneratorSpec,
    gen_counterexamples,
    gen_rank2,
    gen_rank2_parity,
    gen_vanishing,
    generate,
    haar_local_scramble,
    haar_unitary,
)
from .io import format_uop, parse_uop, read_uop, write_uop
from .schmidt import (
    ProductExpansion2,
    SchmidtDecomposition,
    decompose,
    local_pair,
    product_rank2_decompose,
    schmidt_rank,
)
from .simdiag import LocalDiagonalizer, SpanReport, gram_span, lemma2_diagonalize, simultaneous_svd_to_control
from .verify import VerificationReport, verify_certificate, verify_two_term

__version__ = "0.1.0"

__all__ = [
    "ClusterCountMismatch",
    "ControlParty",
    "ControlScanReport",
    "ControlledFormCertificate",
    "Cut",
    "DEFAULT_TOL",
    "DimensionError",
    "GeneratorSpec",
    "LocalDiagonalizer",
    "MalformedCertificate",
    "MultipartiteOperator",
    "NotRank2",
    "NotUnitaryError",
    "NumericalFailure",
    "OpSchmidtError",
    "PartyDims",
    "PipelineTrace",
    "PreconditionFailed",
    "ProductExpansion2",
    "SchmidtDecomposition",
    "SpanReport",
    "Theorem8Result",
    "Tolerances",
    "TwoTermControl",
    "UopFormatError",
    "VerificationReport",
    "apply_locals",
    "build_controlled",
    "decompose",
    "format_uop",
    "gen_counterexamples",
    "gen_rank2",
    "gen_rank2_parity",
    "gen_vanishing",
    "generate",
    "gram_span",
    "haar_local_scramble",
    "haar_unitary",
    "hs_inner",
    "is_unitary",
    "kron",
    "lemma2_diagonalize",
    "lemma3_check",
    "local_pair",
    "parse_uop",
    "product_rank2_decompose",
    "proportional_to_unitary",
    "read_uop",
    "reshuffle",
    "schmidt_rank",
    "simultaneous_svd_to_control",
    "theorem0_pipeline",
    "theorem4_check",
    "theorem8_bipartite",
    "theorem9_scan",
    "unitarity_expansion",
    "unitary_similarity_diagonalize",
    "verify_certificate",
    "verify_two_term",
    "write_uop",
]
