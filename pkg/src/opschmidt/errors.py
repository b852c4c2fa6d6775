"""Exception hierarchy shared by all modules."""


class OpSchmidtError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(OpSchmidtError, ValueError):
    """Shapes or party dimensions are inconsistent."""


class NotUnitaryError(OpSchmidtError, ValueError):
    """A matrix that must be unitary is not, within tolerance."""


class NotRank2(OpSchmidtError):
    """The operator is not of multipartite operator Schmidt rank 2.

    ``rank`` holds the offending cut rank when one was measured (1 for a
    product operator, >2 for higher rank), otherwise None.
    """

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class PreconditionFailed(OpSchmidtError):
    """Input does not satisfy an algorithm's mathematical precondition."""


class NumericalFailure(OpSchmidtError):
    """A construction finished but its residual exceeds tolerance."""


class ClusterCountMismatch(NumericalFailure):
    """Eigenvalues did not split into the expected number of clusters."""


class MalformedCertificate(OpSchmidtError, ValueError):
    """A certificate is structurally invalid."""


class UopFormatError(OpSchmidtError, ValueError):
    """A UOP text file could not be parsed."""

    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
        self.line = line
        self.column = column
