"""
Operator-level data models and the JSON matrix encoding.

A matrix travels as a dim x dim array of [re, im] pairs.
"""
from typing import Any, List, Sequence, Tuple, Type, TypeVar

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, Field, ValidationError

from app.core.errors import NonSquare, SchemaError

Operator = npt.NDArray[np.complex128]
MatrixPayload = List[List[Tuple[float, float]]]
PayloadT = TypeVar("PayloadT", bound=BaseModel)


def encode_matrix(op: np.ndarray) -> MatrixPayload:
    """Encode a complex matrix as nested [re, im] pairs."""
    op = np.asarray(op, dtype=complex)
    return [[(float(z.real), float(z.imag)) for z in row] for row in op]


def decode_matrix(data: Sequence, pointer: str = "") -> Operator:
    """Decode nested [re, im] pairs into a complex matrix."""
    try:
        rows = [[complex(float(pair[0]), float(pair[1])) for pair in row] for row in data]
    except (TypeError, IndexError, ValueError) as exc:
        raise SchemaError(f"matrix entries must be [re, im] pairs: {exc}", pointer=pointer or "/")
    if not rows or any(len(row) != len(rows) for row in rows):
        raise NonSquare("matrix must be square and non-empty", pointer=pointer or "/")
    return np.array(rows, dtype=complex)


class ValidationReport(BaseModel):
    """Result of checking an operator for hermiticity and positivity."""

    passed: bool = Field(..., description="True when every requested check holds")
    hermiticity_defect: float = Field(..., description="max |a_ij - conj(a_ji)|")
    min_eigenvalue: float = Field(..., description="Smallest eigenvalue of the Hermitian part")
    psd_required: bool = False
    tol: float


class BlochVector(BaseModel):
    """Qubit operator (weight * 1 + vec . sigma) / 2."""

    weight: float = Field(..., description="Trace of the operator")
    vec: Tuple[float, float, float] = Field(..., description="Pauli coordinates tr(op sigma_i)")

    def normalized(self) -> np.ndarray:
        """Unit-ball Bloch vector of op / tr(op)."""
        return np.asarray(self.vec) / self.weight


class StatePayload(BaseModel):
    """Bipartite density operator with its subsystem dimensions (A first)."""

    dims: Tuple[int, int]
    matrix: MatrixPayload

    def to_domain(self) -> Operator:
        op = decode_matrix(self.matrix, pointer="/matrix")
        if op.shape[0] != self.dims[0] * self.dims[1]:
            raise SchemaError(
                f"state of dimension {op.shape[0]} does not match dims {tuple(self.dims)}",
                pointer="/dims",
            )
        return op


def pointer_from(exc: ValidationError) -> str:
    """JSON pointer of the first pydantic validation error."""
    loc = exc.errors()[0].get("loc", ())
    return "/" + "/".join(str(part) for part in loc)


def parse_payload(model: Type[PayloadT], data: Any) -> PayloadT:
    """Validate raw JSON data against a payload model, raising SchemaError."""
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise SchemaError(str(exc.errors()[0]["msg"]), pointer=pointer_from(exc))
