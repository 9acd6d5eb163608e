"""
Main FastAPI application.
"""
from contextlib import asynccontextmanager

import cvxpy as cp
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.api.bridge import router as bridge_router
from app.api.ft import router as ft_router
from app.api.jm import router as jm_router
from app.api.lhv import router as lhv_router
from app.api.stdlib import router as stdlib_router
from app.api.steering import router as steering_router
from app.core.config import settings
from app.core.log import configure_logging, logger


def solver_status() -> dict:
    installed = set(cp.installed_solvers())
    return {
        "solver": settings.solver,
        "solver_installed": settings.solver in installed,
        "fallback_solver": settings.fallback_solver,
        "fallback_installed": settings.fallback_solver in installed,
    }


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan management."""
    configure_logging()
    status = solver_status()
    logger.info("Starting {} {}", settings.api_title, settings.api_version)
    logger.info(
        "Conic solver {} ({}), fallback {} ({})",
        status["solver"], "installed" if status["solver_installed"] else "missing",
        status["fallback_solver"], "installed" if status["fallback_installed"] else "missing",
    )
    yield
    logger.info("Shutting down {}", settings.api_title)


def create_app() -> FastAPI:
    """Create and configure the FastAPI application."""

    app = FastAPI(
        title=settings.api_title,
        description=settings.api_description,
        version=settings.api_version,
        debug=settings.debug,
        lifespan=lifespan,
    )

    app.add_middleware(
        CORSMiddleware,
        allow_origins=settings.allowed_origins,
        allow_credentials=settings.allowed_credentials,
        allow_methods=settings.allowed_methods,
        allow_headers=settings.allowed_headers,
    )

    for router in (jm_router, steering_router, bridge_router, ft_router, lhv_router, stdlib_router):
        app.include_router(router, prefix="/api/v1")

    @app.get("/")
    async def root():
        """Root endpoint."""
        return {
            "message": settings.api_title,
            "version": settings.api_version,
            "docs": "/docs",
            "openapi": "/openapi.json",
        }

    @app.get("/health")
    async def health_check():
        """Health check endpoint."""
        status = solver_status()
        healthy = status["solver_installed"] or status["fallback_installed"]
        return {
            "status": "healthy" if healthy else "degraded",
            "version": settings.api_version,
            **status,
        }

    return app


app = create_app()


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "app.main:app",
        host=settings.host,
        port=settings.port,
        reload=settings.debug,
    )
