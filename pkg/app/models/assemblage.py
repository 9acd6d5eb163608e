"""
Assemblage data model: Bob's subnormalized conditional states sigma_{x|k}.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from app.core.errors import DimensionMismatch, EmptyOutcomeList, SchemaError
from app.models.operators import MatrixPayload, Operator, decode_matrix, encode_matrix


@dataclass(frozen=True, eq=False)
class Assemblage:
    """members[k][x] = sigma_{x|k}, each a dim_b x dim_b operator."""

    dim_b: int
    members: tuple

    def __init__(self, members: Sequence[Sequence[np.ndarray]]):
        if len(members) == 0 or any(len(row) == 0 for row in members):
            raise EmptyOutcomeList("an assemblage needs at least one measurement and outcome")
        rows = tuple(tuple(np.array(s, dtype=complex) for s in row) for row in members)
        dim_b = rows[0][0].shape[0]
        for row in rows:
            for s in row:
                if s.shape != (dim_b, dim_b):
                    raise DimensionMismatch(f"member of shape {s.shape}, expected {(dim_b, dim_b)}")
                s.setflags(write=False)
        object.__setattr__(self, "dim_b", dim_b)
        object.__setattr__(self, "members", rows)

    @property
    def outcome_counts(self) -> List[int]:
        return [len(row) for row in self.members]

    def member(self, k: int, x: int) -> Operator:
        return self.members[k][x]

    def traces(self) -> List[List[float]]:
        """t_{x|k} = tr sigma_{x|k}."""
        return [[float(np.trace(s).real) for s in row] for row in self.members]

    def marginal(self, k: int = 0) -> Operator:
        """rho_B as the sum over outcomes of measurement k."""
        return np.sum(self.members[k], axis=0)

    def to_payload(self) -> "AssemblagePayload":
        return AssemblagePayload(
            dimB=self.dim_b,
            outcomes=self.outcome_counts,
            members=[[encode_matrix(s) for s in row] for row in self.members],
        )


class AssemblagePayload(BaseModel):
    """JSON schema {"dimB": d, "outcomes": [m_1, ...], "members": [[matrix per outcome] per measurement]}."""

    dimB: int = Field(..., ge=1, description="Dimension of Bob's system")
    outcomes: List[int] = Field(..., min_length=1, description="Outcome count per measurement")
    members: List[List[MatrixPayload]] = Field(..., min_length=1)
    name: Optional[str] = None

    def to_domain(self) -> Assemblage:
        if len(self.outcomes) != len(self.members):
            raise SchemaError(
                f"{len(self.outcomes)} outcome counts for {len(self.members)} measurements",
                pointer="/outcomes",
            )
        rows = []
        for k, (count, row) in enumerate(zip(self.outcomes, self.members)):
            if len(row) != count:
                raise SchemaError(f"expected {count} members, got {len(row)}", pointer=f"/members/{k}")
            decoded = []
            for x, matrix in enumerate(row):
                op = decode_matrix(matrix, pointer=f"/members/{k}/{x}")
                if op.shape[0] != self.dimB:
                    raise SchemaError(
                        f"member has dimension {op.shape[0]}, expected {self.dimB}",
                        pointer=f"/members/{k}/{x}",
                    )
                decoded.append(op)
            rows.append(decoded)
        return Assemblage(rows)
