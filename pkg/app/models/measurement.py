"""
Measurement data models: POVMs, measurement sets and their JSON schema.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from app.core.errors import DimensionMismatch, EmptyOutcomeList, SchemaError
from app.models.operators import MatrixPayload, Operator, decode_matrix, encode_matrix


@dataclass(frozen=True, eq=False)
class Povm:
    """Ordered effects of one measurement; outcome labels are positions."""

    effects: tuple

    def __init__(self, effects: Sequence[np.ndarray]):
        if len(effects) == 0:
            raise EmptyOutcomeList("a POVM needs at least one effect")
        arrays = tuple(np.array(e, dtype=complex) for e in effects)
        dim = arrays[0].shape[0]
        for e in arrays:
            if e.shape != (dim, dim):
                raise DimensionMismatch(f"effect of shape {e.shape} in a POVM of dimension {dim}")
            e.setflags(write=False)
        object.__setattr__(self, "effects", arrays)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)

    def total(self) -> Operator:
        return np.sum(self.effects, axis=0)


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Measurements indexed by k, all acting on the same Hilbert space."""

    povms: tuple

    def __init__(self, povms: Sequence[Povm]):
        if len(povms) == 0:
            raise EmptyOutcomeList("a measurement set needs at least one POVM")
        dims = {p.dim for p in povms}
        if len(dims) != 1:
            raise DimensionMismatch(f"POVMs act on different dimensions {sorted(dims)}")
        object.__setattr__(self, "povms", tuple(povms))

    @classmethod
    def from_effects(cls, effects: Sequence[Sequence[np.ndarray]]) -> "MeasurementSet":
        return cls([Povm(es) for es in effects])

    @property
    def dim(self) -> int:
        return self.povms[0].dim

    @property
    def outcome_counts(self) -> List[int]:
        return [p.n_outcomes for p in self.povms]

    def __len__(self) -> int:
        return len(self.povms)

    def effect(self, k: int, x: int) -> Operator:
        return self.povms[k].effects[x]

    def subset(self, indices: Sequence[int]) -> "MeasurementSet":
        return MeasurementSet([self.povms[k] for k in indices])

    def union(self, other: "MeasurementSet") -> "MeasurementSet":
        return MeasurementSet(list(self.povms) + list(other.povms))

    def to_payload(self, name: Optional[str] = None) -> "MeasurementSetPayload":
        return MeasurementSetPayload(
            dim=self.dim,
            povms=[[encode_matrix(e) for e in p.effects] for p in self.povms],
            name=name,
        )


class MeasurementSetPayload(BaseModel):
    """JSON schema {"dim": d, "povms": [[matrix, ...], ...]}."""

    dim: int = Field(..., ge=1, description="Hilbert space dimension")
    povms: List[List[MatrixPayload]] = Field(..., min_length=1, description="Effects per measurement")
    name: Optional[str] = Field(None, description="Label of a standard construction")

    def to_domain(self) -> MeasurementSet:
        povms = []
        for k, effects in enumerate(self.povms):
            if not effects:
                raise SchemaError("measurement without outcomes", pointer=f"/povms/{k}")
            decoded = []
            for x, matrix in enumerate(effects):
                op = decode_matrix(matrix, pointer=f"/povms/{k}/{x}")
                if op.shape[0] != self.dim:
                    raise SchemaError(
                        f"effect has dimension {op.shape[0]}, expected {self.dim}",
                        pointer=f"/povms/{k}/{x}",
                    )
                decoded.append(op)
            povms.append(Povm(decoded))
        return MeasurementSet(povms)
