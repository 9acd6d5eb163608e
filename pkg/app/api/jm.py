"""
Joint measurability endpoints.
"""
from typing import Any, Dict

from fastapi import APIRouter

from app.api.deps import resolve_measurements, respond
from app.models.requests import MeasurementSource, ParentRequest, RobustnessRequest
from app.services import reports

router = APIRouter(prefix="/jm", tags=["joint measurability"])


@router.post("/check")
def check(request: MeasurementSource) -> Dict[str, Any]:
    """Decide joint measurability; the verdict carries a certificate digest."""
    return respond(lambda: reports.jm_check(resolve_measurements(request), request.tol))


@router.post("/robustness")
def robustness(request: RobustnessRequest) -> Dict[str, Any]:
    return respond(
        lambda: reports.jm_robustness(
            resolve_measurements(request), mode=request.mode, oracle=request.oracle, tol=request.tol
        )
    )


@router.post("/parent")
def parent(request: ParentRequest) -> Dict[str, Any]:
    """Parent POVM of the set at noise parameter `lam`."""
    return respond(lambda: reports.jm_parent(resolve_measurements(request), request.lam, request.tol))
