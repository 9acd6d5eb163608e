"""
Steering endpoints.
"""
from typing import Any, Dict

from fastapi import APIRouter

from app.api.deps import resolve_assemblage, respond
from app.models.requests import AssemblageSource, SteeringRobustnessRequest
from app.services import reports

router = APIRouter(prefix="/steer", tags=["steering"])


@router.post("/check")
def check(request: AssemblageSource) -> Dict[str, Any]:
    return respond(lambda: reports.steer_check(resolve_assemblage(request), request.tol))


@router.post("/robustness")
def robustness(request: SteeringRobustnessRequest) -> Dict[str, Any]:
    return respond(lambda: reports.steer_robustness(resolve_assemblage(request), request.mode, request.tol))
