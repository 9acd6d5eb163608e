"""
Helpers shared by the API routers: resolving request sources and mapping
domain errors to HTTP responses.
"""
from typing import Callable

from fastapi import HTTPException, status
from loguru import logger

from app.core.errors import JmSteerError, SchemaError
from app.models.assemblage import Assemblage
from app.models.measurement import MeasurementSet
from app.models.requests import AssemblageSource, MeasurementSource
from app.services.bridge import assemblage_of
from app.services.measurements import depolarize, standard_set
from app.services.reports import Report, round_sig
from app.services.steering import depolarize_assemblage


def resolve_measurements(request: MeasurementSource) -> MeasurementSet:
    if request.measurements is not None:
        measurements = request.measurements.to_domain()
    elif request.stdlib is not None:
        measurements = standard_set(request.stdlib, **request.params)
    else:
        raise SchemaError("give measurements or stdlib", pointer="/measurements")
    return measurements if request.eta is None else depolarize(measurements, request.eta)


def resolve_assemblage(request: AssemblageSource) -> Assemblage:
    if request.assemblage is not None:
        asm = request.assemblage.to_domain()
    elif request.stdlib is not None:
        asm = assemblage_of(standard_set(request.stdlib, **request.params))
    else:
        raise SchemaError("give assemblage or stdlib", pointer="/assemblage")
    return asm if request.eta is None else depolarize_assemblage(asm, request.eta)


def respond(build: Callable[[], Report]) -> dict:
    """Run a report builder; domain errors become HTTP errors with their payload."""
    try:
        report = build()
    except JmSteerError as exc:
        logger.warning("{}: {}", type(exc).__name__, exc.message)
        raise HTTPException(status_code=exc.status_code, detail=exc.to_payload())
    except Exception as exc:
        logger.exception("unexpected failure")
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail={"error": type(exc).__name__, "message": str(exc)},
        )
    return round_sig(report.payload)
