"""Exception hierarchy for the rank workbench.

Library code raises these; only the command-line layer turns them into
exit codes.
"""


class TensorRankError(Exception):
    """Base class for every error raised by tensorrank."""


class FieldMismatchError(TensorRankError, ValueError):
    """Operands live over different fields."""


class DimensionMismatchError(TensorRankError, ValueError):
    """Operand shapes are incompatible."""


class UnsupportedFieldError(TensorRankError, ValueError):
    """The operation needs a finite (prime) field."""


class PreconditionError(TensorRankError, ValueError):
    """A documented precondition of an operation does not hold."""


class ClassificationError(TensorRankError):
    """A decomposition term fits none of the seven block types."""

    def __init__(self, term_index: int, message: str = ""):
        self.term_index = term_index
        super().__init__(message or f"term {term_index} lies in none of the seven subspaces")


class CensusTooLargeError(TensorRankError, ValueError):
    """The requested census would enumerate too many tensors."""


class TensorFileError(TensorRankError, ValueError):
    """A tensor or decomposition file could not be parsed."""
