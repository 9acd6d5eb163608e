"""
Request bodies of the HTTP API.
"""
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

from app.models.assemblage import AssemblagePayload
from app.models.measurement import MeasurementSetPayload
from app.models.operators import StatePayload


class MeasurementSource(BaseModel):
    """Either an explicit measurement set or a named construction, optionally depolarized."""

    measurements: Optional[MeasurementSetPayload] = None
    stdlib: Optional[str] = Field(None, description="Name of a standard set")
    params: Dict[str, Any] = Field(default_factory=dict)
    eta: Optional[float] = Field(None, ge=0.0, le=1.0, description="White-noise parameter")
    tol: Optional[float] = Field(None, gt=0.0)


class RobustnessRequest(MeasurementSource):
    mode: Literal["direct", "bisection"] = "direct"
    oracle: Literal["sdp", "projection"] = "sdp"


class ParentRequest(MeasurementSource):
    lam: float = Field(1.0, ge=0.0, le=1.0)


class AssemblageSource(BaseModel):
    """An explicit assemblage or the |phi+> assemblage of a named measurement set."""

    assemblage: Optional[AssemblagePayload] = None
    stdlib: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    eta: Optional[float] = Field(None, ge=0.0, le=1.0)
    tol: Optional[float] = Field(None, gt=0.0)


class SteeringRobustnessRequest(AssemblageSource):
    mode: Literal["direct", "bisection"] = "direct"


class DualityRequest(MeasurementSource):
    state: StatePayload
    lam: float = Field(..., ge=0.0, le=1.0)


class FtRequest(AssemblageSource):
    x1: Optional[Tuple[float, float, float]] = None
    x2: Optional[Tuple[float, float, float]] = None
    x3: Optional[Tuple[float, float, float]] = None


class LhvRequest(BaseModel):
    s: float = Field(..., ge=0.0, le=1.0, description="Schmidt coefficient")
    angles: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    lam: float = Field(1.0, ge=0.0, le=1.0)
    classes: List[str] = Field(default_factory=lambda: ["noisy_bell", "sym_ext_A_2"])
    n_bob: Optional[int] = None
    robust: bool = False
    symmetry: Optional[Literal["permutation", "bose"]] = None
    ppt: Optional[bool] = None
