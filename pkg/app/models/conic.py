"""
Conic problem and certificate models.

A problem has Hermitian PSD block variables, optional real scalars with
bounds, and affine equalities of the form

    sum_i c_i * L_i @ X_i @ R_i  +  sum_j s_j * M_j  ==  T

with an optional objective sum_j w_j * s_j to maximize.
"""
import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from app.core.config import settings
from app.core.errors import DimensionMismatch, ShapeMismatch
from app.models.operators import encode_matrix


class SolverTolerances(BaseModel):
    """Tolerances used by solve() and verify()."""

    feasibility: float = Field(default_factory=lambda: settings.feasibility_tol)
    gap: float = Field(default_factory=lambda: settings.gap_tol)
    witness: float = Field(default_factory=lambda: settings.witness_tol)
    bisection_width: float = Field(default_factory=lambda: settings.bisection_width)


@dataclass(frozen=True)
class Block:
    """PSD variable; trace_bound caps tr X over every feasible point when known."""

    name: str
    dim: int
    trace_bound: Optional[float] = None


@dataclass(frozen=True)
class Scalar:
    name: str
    lower: Optional[float] = None
    upper: Optional[float] = None


@dataclass(frozen=True, eq=False)
class Term:
    """coefficient * left @ X @ right; left/right default to the identity."""

    variable: str
    coefficient: complex = 1.0
    left: Optional[np.ndarray] = None
    right: Optional[np.ndarray] = None

    def out_shape(self, dim: int) -> Tuple[int, int]:
        rows = dim if self.left is None else self.left.shape[0]
        cols = dim if self.right is None else self.right.shape[1]
        if self.left is not None and self.left.shape[1] != dim:
            raise ShapeMismatch(f"left factor {self.left.shape} does not act on dimension {dim}")
        if self.right is not None and self.right.shape[0] != dim:
            raise ShapeMismatch(f"right factor {self.right.shape} does not act on dimension {dim}")
        return rows, cols

    def apply(self, x: np.ndarray) -> np.ndarray:
        out = x
        if self.left is not None:
            out = self.left @ out
        if self.right is not None:
            out = out @ self.right
        return self.coefficient * out

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """Hermitian part of conj(c) L^H Y R^H, i.e. the adjoint w.r.t. Re tr(A^H B)."""
        out = y
        if self.left is not None:
            out = self.left.conj().T @ out
        if self.right is not None:
            out = out @ self.right.conj().T
        out = np.conj(self.coefficient) * out
        return (out + out.conj().T) / 2


@dataclass(frozen=True, eq=False)
class ScalarTerm:
    scalar: str
    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class Equality:
    label: str
    target: np.ndarray
    terms: Tuple[Term, ...]
    scalar_terms: Tuple[ScalarTerm, ...] = ()


@dataclass(frozen=True, eq=False)
class ConicProblem:
    blocks: Tuple[Block, ...]
    equalities: Tuple[Equality, ...]
    scalars: Tuple[Scalar, ...] = ()
    objective: Optional[Dict[str, float]] = None
    name: str = ""

    def __post_init__(self):
        names = [b.name for b in self.blocks] + [s.name for s in self.scalars]
        if len(set(names)) != len(names):
            raise ShapeMismatch(f"duplicate variable names in problem {self.name!r}")
        labels = [e.label for e in self.equalities]
        if len(set(labels)) != len(labels):
            raise ShapeMismatch(f"duplicate equality labels in problem {self.name!r}")
        dims = self.block_dims
        scalar_names = {s.name for s in self.scalars}
        for eq in self.equalities:
            target = eq.target
            if target.ndim != 2 or target.shape[0] != target.shape[1]:
                raise ShapeMismatch(f"equality {eq.label!r}: target must be square")
            scale = max(1.0, float(np.max(np.abs(target))))
            if np.max(np.abs(target - target.conj().T)) > 1e-12 * scale:
                raise ShapeMismatch(f"equality {eq.label!r}: target is not Hermitian")
            for term in eq.terms:
                if term.variable not in dims:
                    raise ShapeMismatch(f"equality {eq.label!r} references unknown block {term.variable!r}")
                if term.out_shape(dims[term.variable]) != target.shape:
                    raise DimensionMismatch(f"equality {eq.label!r}: term on {term.variable!r} has wrong shape")
            for sterm in eq.scalar_terms:
                if sterm.scalar not in scalar_names:
                    raise ShapeMismatch(f"equality {eq.label!r} references unknown scalar {sterm.scalar!r}")
                if sterm.matrix.shape != target.shape:
                    raise DimensionMismatch(f"equality {eq.label!r}: scalar term has wrong shape")
        for name in (self.objective or {}):
            if name not in scalar_names:
                raise ShapeMismatch(f"objective references unknown scalar {name!r}")

    @property
    def block_dims(self) -> Dict[str, int]:
        return {b.name: b.dim for b in self.blocks}


class CertificateStatus(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(eq=False)
class ConicCertificate:
    """Primal assignment (Feasible) or Farkas multipliers (Infeasible)."""

    status: CertificateStatus
    blocks: Dict[str, np.ndarray] = field(default_factory=dict)
    scalars: Dict[str, float] = field(default_factory=dict)
    dual: Dict[str, np.ndarray] = field(default_factory=dict)
    residual: float = float("nan")
    min_eigenvalue: float = float("nan")
    separation: Optional[float] = None
    objective: Optional[float] = None
    solver: str = ""
    solver_status: str = ""

    @property
    def feasible(self) -> bool:
        return self.status is CertificateStatus.FEASIBLE

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "residual": self.residual,
            "min_eigenvalue": self.min_eigenvalue,
            "separation": self.separation,
            "objective": self.objective,
            "solver": self.solver,
            "solver_status": self.solver_status,
        }

    def to_payload(self, include_values: bool = True) -> dict:
        payload = self.summary()
        payload["digest"] = self.digest()
        if include_values:
            payload["scalars"] = dict(self.scalars)
            payload["blocks"] = {k: encode_matrix(v) for k, v in self.blocks.items()}
            payload["dual"] = {k: encode_matrix(v) for k, v in self.dual.items()}
        return payload

    def digest(self) -> str:
        """sha256 over the status and the certificate values rounded to 10 digits."""
        canonical = {
            "status": self.status.value,
            "scalars": {k: round(v, 10) for k, v in sorted(self.scalars.items())},
            "blocks": {k: _rounded(v) for k, v in sorted(self.blocks.items())},
            "dual": {k: _rounded(v) for k, v in sorted(self.dual.items())},
        }
        text = json.dumps(canonical, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _rounded(op: np.ndarray) -> List[List[List[float]]]:
    # +0.0 folds negative zeros so equal certificates hash equally
    return [[[round(z.real, 10) + 0.0, round(z.imag, 10) + 0.0] for z in row] for row in np.asarray(op, dtype=complex)]


class VerificationReport(BaseModel):
    """Independent re-check of a certificate against its problem."""

    passed: bool
    status: CertificateStatus
    max_residual: Optional[float] = None
    min_eigenvalue: Optional[float] = None
    separation: Optional[float] = None
    objective: Optional[float] = None
    notes: List[str] = Field(default_factory=list)
