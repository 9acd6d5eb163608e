"""
Assemblages: validation, induction from a bipartite state, local-hidden-state
feasibility and white-noise steering robustness.
"""
from typing import Dict, Literal, Optional, Tuple

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import (
    DimensionMismatch,
    InvalidAssemblage,
    InvalidState,
    NumericalFailure,
    RangeError,
    TooManyStrategies,
)
from app.models.assemblage import Assemblage
from app.models.conic import ConicCertificate, SolverTolerances
from app.models.measurement import MeasurementSet
from app.models.results import AssemblageReport, RobustnessResult
from app.services import conic
from app.services.hermitian import dagger, hermitian_part, identity, min_eigenvalue, partial_trace, tensor
from app.services.strategies import NOISE_SCALAR, bisect_threshold, decomposition_problem

Mode = Literal["direct", "bisection"]


def validate_assemblage(asm: Assemblage, tol: Optional[float] = None) -> AssemblageReport:
    tol = settings.psd_tol if tol is None else tol
    rho_b = asm.marginal(0)
    lowest = min(min_eigenvalue(s) for row in asm.members for s in row)
    no_signaling = max(float(np.max(np.abs(asm.marginal(k) - rho_b))) for k in range(len(asm.members)))
    trace_defect = abs(float(np.trace(rho_b).real) - 1.0)
    hermiticity = max(float(np.max(np.abs(s - dagger(s)))) for row in asm.members for s in row)
    return AssemblageReport(
        passed=lowest >= -tol and no_signaling <= tol and trace_defect <= tol and hermiticity <= tol,
        min_eigenvalue=lowest,
        no_signaling_defect=no_signaling,
        trace_defect=trace_defect,
        tol=tol,
    )


def require_valid_assemblage(asm: Assemblage, tol: Optional[float] = None) -> None:
    report = validate_assemblage(asm, tol)
    if not report.passed:
        raise InvalidAssemblage(
            f"invalid assemblage (min eigenvalue {report.min_eigenvalue:.3e}, "
            f"no-signaling defect {report.no_signaling_defect:.3e}, trace defect {report.trace_defect:.3e})"
        )


def require_density(state: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    tol = settings.psd_tol if tol is None else tol
    state = np.asarray(state, dtype=complex)
    if state.ndim != 2 or state.shape[0] != state.shape[1]:
        raise InvalidState(f"state of shape {state.shape} is not square")
    if np.max(np.abs(state - dagger(state))) > tol:
        raise InvalidState("state is not Hermitian")
    if min_eigenvalue(state) < -tol:
        raise InvalidState(f"state has negative eigenvalue {min_eigenvalue(state):.3e}")
    if abs(np.trace(state).real - 1.0) > tol:
        raise InvalidState(f"state has trace {np.trace(state).real:.12g}")
    return state


def induced_assemblage(state: np.ndarray, alice: MeasurementSet) -> Assemblage:
    """sigma_{x|k} = tr_A[(A_k(x) (x) 1) rho]."""
    state = require_density(state)
    d_a = alice.dim
    if state.shape[0] % d_a:
        raise DimensionMismatch(f"state dimension {state.shape[0]} is not a multiple of Alice's dimension {d_a}")
    d_b = state.shape[0] // d_a
    one = identity(d_b)
    return Assemblage(
        [
            [hermitian_part(partial_trace(tensor(effect, one) @ state, (d_a, d_b), keep="B")) for effect in p.effects]
            for p in alice.povms
        ]
    )


def _noise_targets(asm: Assemblage):
    rho_b = asm.marginal(0)
    return [[t * rho_b for t in row] for row in asm.traces()]


def depolarize_assemblage(asm: Assemblage, lam: float) -> Assemblage:
    """sigma_{x|k} -> lam sigma_{x|k} + (1 - lam) tr[sigma_{x|k}] rho_B."""
    if not 0.0 <= lam <= 1.0:
        raise RangeError(f"noise parameter {lam} outside [0, 1]")
    noise = _noise_targets(asm)
    return Assemblage(
        [[lam * s + (1 - lam) * n for s, n in zip(row, noise_row)] for row, noise_row in zip(asm.members, noise)]
    )


def _tolerances(tol: Optional[float]) -> SolverTolerances:
    return SolverTolerances() if tol is None else SolverTolerances(feasibility=tol)


def lhs_feasible(asm: Assemblage, tol: Optional[float] = None) -> Tuple[bool, ConicCertificate]:
    """True when a local-hidden-state model exists; the assemblage is steerable otherwise."""
    require_valid_assemblage(asm)
    problem, _ = decomposition_problem([list(row) for row in asm.members], name="lhs", error=TooManyStrategies)
    certificate = conic.solve(problem, _tolerances(tol))
    logger.debug("lhs_feasible: outcomes {} -> {}", asm.outcome_counts, certificate.status.value)
    return certificate.feasible, certificate


def steering_robustness(asm: Assemblage, mode: Mode = "direct", tol: Optional[float] = None) -> RobustnessResult:
    """sup{lam : depolarize_assemblage(asm, lam) admits an LHS model}."""
    require_valid_assemblage(asm)
    tolerances = _tolerances(tol)
    if mode == "direct":
        problem, _ = decomposition_problem(
            [list(row) for row in asm.members], _noise_targets(asm), name="lhs-robustness", error=TooManyStrategies
        )
        primal = conic.solve(problem, tolerances)
        if not primal.feasible:
            raise NumericalFailure("robustness problem reported infeasible although lam = 0 is always feasible")
        lam_max = float(np.clip(primal.scalars[NOISE_SCALAR], 0.0, 1.0))
        diagnostics = {"solver": primal.solver, "solver_status": primal.solver_status}
    elif mode == "bisection":
        certificates: Dict[float, ConicCertificate] = {}

        def check(lam: float) -> bool:
            feasible, certificate = lhs_feasible(depolarize_assemblage(asm, lam), tol)
            if feasible:
                certificates[lam] = certificate
            return feasible

        lam_max, steps = bisect_threshold(check, tolerances.bisection_width)
        if lam_max not in certificates and not check(lam_max):
            raise NumericalFailure(f"no LHS certificate at lambda = {lam_max:.9f}")
        primal = certificates[lam_max]
        diagnostics = {"steps": steps, "width": tolerances.bisection_width}
    else:
        raise RangeError(f"unknown robustness mode {mode!r}")

    witness, witness_lambda = None, None
    if lam_max + settings.witness_offset <= 1.0:
        witness_lambda = lam_max + settings.witness_offset
        feasible, witness = lhs_feasible(depolarize_assemblage(asm, witness_lambda), tol)
        if feasible:
            logger.warning("no steering witness at lambda = {:.6f}", witness_lambda)
    logger.info("steering_robustness ({}): lambda_max = {:.9f}", mode, lam_max)
    return RobustnessResult(
        lambda_max=lam_max,
        primal=primal,
        witness=witness,
        witness_lambda=witness_lambda,
        mode=mode,
        diagnostics=diagnostics,
    )
