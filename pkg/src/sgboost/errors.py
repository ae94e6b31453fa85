"""Exception hierarchy.

``ValidationError`` subclasses signal bad input (the CLI maps them to exit
code 2); ``NumericError`` subclasses signal failures inside the numerics
(exit code 1).
"""


class SGBoostError(Exception):
    """Base class for all package errors."""

    code = "error"


class ValidationError(SGBoostError, ValueError):
    code = "invalid"


class NumericError(SGBoostError, ArithmeticError):
    code = "numeric"


class DimensionMismatch(ValidationError):
    code = "dimension-mismatch"


class SingularBlock(NumericError):
    code = "singular-block"


class InfeasibleDf(ValidationError):
    code = "infeasible-df"


class MissingOutcome(ValidationError):
    code = "missing-outcome"


class NonNumericColumn(ValidationError):
    code = "non-numeric-column"


class ConstantColumn(ValidationError):
    code = "constant-column"


class UnknownVariable(ValidationError):
    code = "unknown-variable"


class InvalidGroups(ValidationError):
    code = "invalid-groups"


class NoLearners(ValidationError):
    code = "no-learners"


class OutOfRange(ValidationError):
    code = "out-of-range"


class EmptyModel(ValidationError):
    code = "empty-model"


class FoldTooSmall(ValidationError):
    code = "fold-too-small"


class CorruptModel(ValidationError):
    code = "corrupt-model"
