"""
Fermat-Torricelli steering criterion endpoint.
"""
from typing import Any, Dict

from fastapi import APIRouter

from app.api.deps import resolve_assemblage, respond
from app.core.errors import SchemaError
from app.models.requests import FtRequest
from app.models.results import FtInstance
from app.services import reports

router = APIRouter(prefix="/ft", tags=["fermat-torricelli"])


def _report(request: FtRequest) -> reports.Report:
    vectors = (request.x1, request.x2, request.x3)
    if all(v is not None for v in vectors):
        return reports.ft_eval(FtInstance(x1=request.x1, x2=request.x2, x3=request.x3))
    if any(v is not None for v in vectors):
        raise SchemaError("give all of x1, x2, x3", pointer="/x1")
    return reports.ft_eval_assemblage(resolve_assemblage(request))


@router.post("/eval")
def evaluate(request: FtRequest) -> Dict[str, Any]:
    """Value, Fermat-Torricelli point and verdict for three Bloch vectors or a qubit assemblage."""
    return respond(lambda: _report(request))
