"""
Domain errors.

Every error knows the CLI exit code and the HTTP status it maps to.
"""
from typing import Optional


class JmSteerError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 2
    status_code: int = 422

    def __init__(self, message: str, pointer: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.pointer = pointer

    def to_payload(self) -> dict:
        payload = {"error": type(self).__name__, "message": self.message}
        if self.pointer is not None:
            payload["pointer"] = self.pointer
        return payload


class InputError(JmSteerError, ValueError):
    """Malformed or out-of-domain input."""


class NonSquare(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class RangeError(InputError):
    pass


class EmptyOutcomeList(InputError):
    pass


class InvalidMeasurement(InputError):
    pass


class InvalidState(InputError):
    pass


class InvalidAssemblage(InputError):
    pass


class UnknownName(InputError):
    pass


class UnknownClass(InputError):
    pass


class TooManyOutcomes(InputError):
    pass


class TooManyStrategies(TooManyOutcomes):
    pass


class TooManyCopies(InputError):
    pass


class MarginalNotMaximallyMixed(InputError):
    pass


class BiasedMeasurement(InputError):
    pass


class NonMaximallyMixedMarginal(InputError):
    pass


class NotJointlyMeasurable(InputError):
    """No parent POVM exists; a negative verdict rather than bad input."""

    exit_code = 1


class SchemaError(InputError):
    """JSON input does not follow the schema; `pointer` names the offending path."""


class NumericalFailure(JmSteerError, RuntimeError):
    """The solver stalled or produced a certificate that does not verify."""

    exit_code = 3
    status_code = 500


class NonConvergence(NumericalFailure):
    pass
