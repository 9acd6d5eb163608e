"""
Endpoints for the measurement/assemblage correspondence and noise thresholds.
"""
from typing import Any, Dict

from fastapi import APIRouter

from app.api.deps import resolve_assemblage, resolve_measurements, respond
from app.models.requests import AssemblageSource, DualityRequest, MeasurementSource
from app.services import reports

router = APIRouter(prefix="/bridge", tags=["bridge"])


@router.post("/to-assemblage")
def to_assemblage(request: MeasurementSource) -> Dict[str, Any]:
    return respond(lambda: reports.to_assemblage(resolve_measurements(request)))


@router.post("/to-measurements")
def to_measurements(request: AssemblageSource) -> Dict[str, Any]:
    return respond(lambda: reports.to_measurements(resolve_assemblage(request)))


@router.post("/duality-check")
def duality_check(request: DualityRequest) -> Dict[str, Any]:
    return respond(
        lambda: reports.duality_check(request.state.to_domain(), resolve_measurements(request), request.lam)
    )


@router.get("/threshold/{d}")
def threshold(d: int) -> Dict[str, Any]:
    """H_d and the PVM noise threshold (H_d - 1) / (d - 1)."""
    return respond(lambda: reports.threshold(d))
