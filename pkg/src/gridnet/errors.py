"""Exception types raised across the package."""


class GridnetError(Exception):
    """Base class; `code` is the machine-readable name used by the CLI."""

    code = "error"

    def __init__(self, message, **witness):
        super().__init__(message)
        self.witness = witness

    def as_dict(self):
        return {"error": self.code, "message": str(self), "witness": self.witness}


class InvalidParameter(GridnetError, ValueError):
    code = "invalid-parameter"


class LabelingConflict(GridnetError):
    code = "labeling-conflict"


class InvalidAnchor(GridnetError, ValueError):
    code = "invalid-anchor"


class IncompleteLabeling(GridnetError):
    code = "incomplete-labeling"


class PreconditionViolation(GridnetError):
    code = "precondition-violation"


class OrientationFailure(GridnetError):
    code = "orientation-failure"


class ConstantTooSmall(GridnetError):
    code = "constant-too-small"


class DegenerateCell(GridnetError, ValueError):
    code = "degenerate-cell"


class NumericFailure(GridnetError, ArithmeticError):
    code = "numeric-failure"
