"""
Reports and results returned by the services.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from app.models.conic import ConicCertificate
from app.models.operators import encode_matrix


class PovmReport(BaseModel):
    """Positivity and completeness of one POVM."""

    passed: bool
    min_eigenvalue: float = Field(..., description="Lowest eigenvalue over all effects")
    worst_effect: int = Field(..., description="Index of the effect with the lowest eigenvalue")
    completeness_defect: float = Field(..., description="max |sum_x E(x) - 1|")
    hermiticity_defect: float
    tol: float


class AssemblageReport(BaseModel):
    """Positivity, no-signaling and normalization of an assemblage."""

    passed: bool
    min_eigenvalue: float
    no_signaling_defect: float = Field(..., description="max over k of max |sum_x sigma_{x|k} - rho_B|")
    trace_defect: float = Field(..., description="|tr rho_B - 1|")
    tol: float


@dataclass(eq=False)
class RobustnessResult:
    """Largest white-noise parameter keeping a property, with certificates on both sides."""

    lambda_max: float
    primal: ConicCertificate
    witness: Optional[ConicCertificate] = None
    witness_lambda: Optional[float] = None
    mode: str = "direct"
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def to_payload(self, include_values: bool = False) -> dict:
        return {
            "lambda_max": self.lambda_max,
            "mode": self.mode,
            "primal": self.primal.to_payload(include_values),
            "witness": None if self.witness is None else self.witness.to_payload(include_values),
            "witness_lambda": self.witness_lambda,
            "diagnostics": self.diagnostics,
        }


class ThresholdTable(BaseModel):
    """Harmonic number H_d and the PVM noise threshold (H_d - 1) / (d - 1)."""

    d: int = Field(..., ge=2)
    harmonic: float
    lambda_star: float
    harmonic_exact: str
    lambda_star_exact: str


class FtInstance(BaseModel):
    """Bloch vectors x_1, x_2, x_3 of Bob's normalized '+' conditional states."""

    x1: Tuple[float, float, float]
    x2: Tuple[float, float, float]
    x3: Tuple[float, float, float]

    def anchors(self) -> np.ndarray:
        x1, x2, x3 = (np.asarray(v, dtype=float) for v in (self.x1, self.x2, self.x3))
        return np.array([x1 + x2 + x3, x1 - x2 - x3, -x1 + x2 - x3, -x1 - x2 + x3])


Verdict = Literal["steerable", "not_steerable", "marginal"]


class FtReport(BaseModel):
    value: float
    point: Tuple[float, float, float]
    anchors: List[Tuple[float, float, float]]
    verdict: Verdict


@dataclass(eq=False)
class DecompositionComponent:
    tag: str
    weight: float
    operator: np.ndarray
    certificate: Optional[np.ndarray] = None

    def to_payload(self) -> dict:
        return {"class": self.tag, "weight": self.weight, "operator": encode_matrix(self.operator)}


@dataclass(eq=False)
class DecompositionResult:
    """Convex decomposition of a target into states with local models."""

    feasible: bool
    components: List[DecompositionComponent]
    residual: float
    certificate: ConicCertificate
    lam: Optional[float] = None

    @property
    def weights(self) -> List[float]:
        return [c.weight for c in self.components]

    def to_payload(self) -> dict:
        return {
            "feasible": self.feasible,
            "residual": self.residual,
            "lambda": self.lam,
            "weights_total": float(sum(self.weights)),
            "components": [c.to_payload() for c in self.components],
            "certificate": self.certificate.to_payload(include_values=False),
        }


class CurveRow(BaseModel):
    s: float
    lambda_max: float
    ua_alpha: float
    ua_beta: float
    ua_gamma: float
    classes: str


class CurveTable(BaseModel):
    rows: List[CurveRow]
    metadata: Dict[str, Any] = Field(default_factory=dict)


class PovmNoiseRow(BaseModel):
    """Robustness of one random POVM set next to the PVM threshold."""

    sample: int
    d: int
    lambda_max: float
    lambda_star: float
    above_threshold: bool


@dataclass(eq=False)
class StateFamilyPoint:
    """lam (U_A (x) 1)|psi_s><psi_s|(U_A (x) 1)^dag + (1 - lam) 1/2 (x) tr_A[...]."""

    s: float
    angles: Tuple[float, float, float]
    unitary: np.ndarray
    lam: float
    state: np.ndarray
    pure: np.ndarray
    noise: np.ndarray

    def to_payload(self) -> dict:
        return {
            "s": self.s,
            "angles": list(self.angles),
            "lambda": self.lam,
            "state": encode_matrix(self.state),
        }
