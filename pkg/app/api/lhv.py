"""
LHV decomposition endpoint.
"""
from typing import Any, Dict

from fastapi import APIRouter

from app.api.deps import respond
from app.models.requests import LhvRequest
from app.services import lhv, reports

router = APIRouter(prefix="/lhv", tags=["lhv"])


@router.post("/decompose")
def decompose(request: LhvRequest) -> Dict[str, Any]:
    return respond(
        lambda: reports.lhv_decompose(
            lhv.state_family(request.s, request.angles, request.lam),
            request.classes,
            request.n_bob,
            robust=request.robust,
            symmetry=request.symmetry,
            ppt=request.ppt,
        )
    )
