"""
Named measurement sets.
"""
from typing import Any, Dict, List, Optional

from fastapi import APIRouter, Body

from app.api.deps import respond
from app.services import reports
from app.services.measurements import standard_names

router = APIRouter(prefix="/stdlib", tags=["stdlib"])


@router.get("/")
def names() -> List[str]:
    return standard_names()


@router.post("/{name}")
def build(name: str, params: Optional[Dict[str, Any]] = Body(None)) -> Dict[str, Any]:
    """The named set in the measurement JSON schema; the body holds its parameters."""
    return respond(lambda: reports.stdlib(name, **(params or {})))
