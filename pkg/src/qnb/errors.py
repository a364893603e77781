"""Exception types raised across the package."""


class QnbError(Exception):
    """Base class for package errors."""


class ValidationError(QnbError, ValueError):
    """A matrix or vector fails a state invariant.

    ``kind`` is one of ``non-hermitian``, ``bad-trace``, ``not-psd``,
    ``dim-mismatch``, ``not-finite`` or ``bad-norm``; ``magnitude`` is the
    measured size of the violation.
    """

    def __init__(self, kind, magnitude, detail=""):
        self.kind = kind
        self.magnitude = float(magnitude)
        msg = f"{kind}: violation {self.magnitude:.3e}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class RangeError(QnbError, ValueError):
    """A scalar parameter lies outside its admissible domain."""


class DimensionError(QnbError, ValueError):
    """Operands have incompatible dimensions."""


class DegeneracyError(QnbError, ValueError):
    """A marginal that must be nondegenerate is not."""


class StructureError(QnbError, ValueError):
    """A degeneracy structure is unsuitable for the requested method."""


class ConvergenceError(QnbError, RuntimeError):
    """The optimizer result disagrees with the sampling oracle."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}
