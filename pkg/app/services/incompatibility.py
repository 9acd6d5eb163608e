"""
Joint measurability: feasibility, parent POVMs, white-noise robustness and
the analytic criterion for pairs of unbiased qubit measurements.
"""
from dataclasses import dataclass
from typing import Callable, Dict, Literal, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import NotJointlyMeasurable, NumericalFailure, RangeError, TooManyOutcomes
from app.models.conic import ConicCertificate, SolverTolerances
from app.models.measurement import MeasurementSet, Povm
from app.models.results import RobustnessResult
from app.services import conic
from app.services.hermitian import from_real_vector, identity, to_real_vector
from app.services.measurements import depolarize, require_valid
from app.services.strategies import (
    NOISE_SCALAR,
    PostProcessing,
    bisect_threshold,
    check_size,
    decomposition_problem,
    ordered_blocks,
)

Mode = Literal["direct", "bisection"]
Oracle = Literal["sdp", "projection"]


@dataclass(eq=False)
class ParentPovm:
    """Joint observable G(lambda) over strategy tuples with its post-processing."""

    povm: Povm
    post: PostProcessing
    residual: float

    def marginals(self) -> MeasurementSet:
        return MeasurementSet.from_effects(self.post.apply(self.povm.effects))


def _tolerances(tol: Optional[float]) -> SolverTolerances:
    return SolverTolerances() if tol is None else SolverTolerances(feasibility=tol)


def _targets(measurements: MeasurementSet):
    return [list(p.effects) for p in measurements.povms]


def _noise_targets(measurements: MeasurementSet):
    d = measurements.dim
    return [[np.trace(e).real / d * identity(d) for e in p.effects] for p in measurements.povms]


def jm_feasible(
    measurements: MeasurementSet,
    tol: Optional[float] = None,
    extra_responses: Sequence[Sequence[Sequence[float]]] = (),
) -> Tuple[bool, ConicCertificate]:
    """Decide whether a parent POVM with deterministic post-processing exists."""
    require_valid(measurements)
    tolerances = _tolerances(tol)
    problem, post = decomposition_problem(
        _targets(measurements), name="jm", error=TooManyOutcomes, extra_responses=extra_responses
    )
    certificate = conic.solve(problem, tolerances)
    if certificate.feasible and not extra_responses:
        total = np.sum(ordered_blocks(certificate.blocks, post), axis=0)
        defect = float(np.max(np.abs(total - identity(measurements.dim))))
        bound = measurements.outcome_counts[0] * tolerances.feasibility
        if defect > bound:
            raise NumericalFailure(f"parent POVM completeness defect {defect:.2e} exceeds {bound:.2e}")
    logger.debug("jm_feasible: {} measurements, outcomes {} -> {}",
                 len(measurements), measurements.outcome_counts, certificate.status.value)
    return certificate.feasible, certificate


def parent_povm(measurements: MeasurementSet, lam: float = 1.0, tol: Optional[float] = None) -> ParentPovm:
    """Verified parent POVM of depolarize(measurements, lam)."""
    noisy = depolarize(measurements, lam)
    feasible, certificate = jm_feasible(noisy, tol)
    if not feasible:
        raise NotJointlyMeasurable(f"the set is not jointly measurable at lambda = {lam}")
    post = PostProcessing(tuple(noisy.outcome_counts))
    parent = ParentPovm(povm=Povm(ordered_blocks(certificate.blocks, post)), post=post, residual=0.0)
    parent.residual = _reconstruction_residual(parent, noisy)
    if parent.residual > 1e-7:
        raise NumericalFailure(f"parent reconstruction residual {parent.residual:.2e} exceeds 1e-7")
    return parent


def _reconstruction_residual(parent: ParentPovm, measurements: MeasurementSet) -> float:
    rebuilt = parent.marginals()
    return max(
        float(np.max(np.abs(rebuilt.effect(k, x) - measurements.effect(k, x))))
        for k, m in enumerate(measurements.outcome_counts)
        for x in range(m)
    )


def jm_robustness(
    measurements: MeasurementSet,
    mode: Mode = "direct",
    oracle: Oracle = "sdp",
    tol: Optional[float] = None,
) -> RobustnessResult:
    """sup{lam : depolarize(measurements, lam) is jointly measurable}."""
    require_valid(measurements)
    tolerances = _tolerances(tol)
    if mode == "direct":
        problem, _ = decomposition_problem(
            _targets(measurements), _noise_targets(measurements), name="jm-robustness"
        )
        primal = conic.solve(problem, tolerances)
        if not primal.feasible:
            raise NumericalFailure("robustness problem reported infeasible although lam = 0 is always feasible")
        lam_max = float(np.clip(primal.scalars[NOISE_SCALAR], 0.0, 1.0))
        diagnostics = {"solver": primal.solver, "solver_status": primal.solver_status}
    elif mode == "bisection":
        certificates: Dict[float, ConicCertificate] = {}
        check = _oracle(oracle, tol, certificates)
        lam_max, steps = bisect_threshold(lambda lam: check(depolarize(measurements, lam), lam), tolerances.bisection_width)
        primal = certificates.get(lam_max) or _certificate_near(measurements, lam_max, tol)
        diagnostics = {"oracle": oracle, "steps": steps, "width": tolerances.bisection_width}
    else:
        raise RangeError(f"unknown robustness mode {mode!r}")

    witness, witness_lambda = None, None
    if lam_max + settings.witness_offset <= 1.0:
        witness_lambda = lam_max + settings.witness_offset
        feasible, witness = jm_feasible(depolarize(measurements, witness_lambda), tol)
        if feasible:
            logger.warning("no infeasibility witness at lambda = {:.6f}", witness_lambda)
    logger.info("jm_robustness ({}): lambda_max = {:.9f}", mode, lam_max)
    return RobustnessResult(
        lambda_max=lam_max,
        primal=primal,
        witness=witness,
        witness_lambda=witness_lambda,
        mode=mode,
        diagnostics=diagnostics,
    )


def _oracle(
    name: Oracle,
    tol: Optional[float],
    certificates: Dict[float, ConicCertificate],
) -> Callable[[MeasurementSet, float], bool]:
    """Feasibility check for bisection; the SDP oracle keeps its feasible certificates by lam."""
    if name == "sdp":

        def check(ms: MeasurementSet, lam: float) -> bool:
            feasible, certificate = jm_feasible(ms, tol)
            if feasible:
                certificates[lam] = certificate
            return feasible

        return check
    if name == "projection":
        return lambda ms, lam: jm_feasible_by_projection(ms)
    raise RangeError(f"unknown feasibility oracle {name!r}")


def _certificate_near(measurements: MeasurementSet, lam: float, tol: Optional[float]) -> ConicCertificate:
    """SDP certificate at lam, stepping back by the witness offset when lam sits on the threshold."""
    for point in (lam, max(lam - settings.witness_offset, 0.0)):
        try:
            feasible, certificate = jm_feasible(depolarize(measurements, point), tol)
        except NumericalFailure as exc:
            logger.warning("no certificate at lambda = {:.9f}: {}", point, exc)
            continue
        if feasible:
            return certificate
    raise NumericalFailure(f"no feasible certificate at or just below lambda = {lam:.9f}")


def jm_feasible_by_projection(
    measurements: MeasurementSet,
    max_iter: int = 20_000,
    tol: float = 1e-7,
) -> bool:
    """Alternating projections between the post-processing affine set and the PSD cone.

    Works in Hermitian-basis coordinates; feasible when both projections agree to `tol`.
    """
    post = check_size(measurements.outcome_counts)
    incidence = post.incidence()
    pinv = np.linalg.pinv(incidence)
    rhs = np.array([to_real_vector(e) for p in measurements.povms for e in p.effects])
    g = pinv @ rhs
    gap = np.inf
    for iteration in range(max_iter):
        psd = np.array([_psd_projection(row) for row in g])
        g = psd - pinv @ (incidence @ psd - rhs)
        previous, gap = gap, float(np.max(np.abs(g - psd)))
        if gap <= tol:
            logger.debug("projection oracle: feasible after {} iterations", iteration + 1)
            return True
        if iteration > 100 and previous - gap < 1e-12 * max(gap, 1.0):
            break
    logger.debug("projection oracle: gap {:.2e} after {} iterations", gap, iteration + 1)
    return False


def _psd_projection(coordinates: np.ndarray) -> np.ndarray:
    op = from_real_vector(coordinates)
    values, vectors = np.linalg.eigh((op + op.conj().T) / 2)
    clipped = vectors @ np.diag(np.clip(values, 0, None)) @ vectors.conj().T
    return to_real_vector(clipped)


def qubit_pair_unbiased_criterion(bloch1: Sequence[float], bloch2: Sequence[float], tol: float = 1e-9) -> bool:
    """Two unbiased qubit measurements (1 +- b.sigma)/2 are jointly measurable
    iff |b1 + b2| + |b1 - b2| <= 2."""
    b1, b2 = np.asarray(bloch1, dtype=float), np.asarray(bloch2, dtype=float)
    for b in (b1, b2):
        if np.linalg.norm(b) > 1 + tol:
            raise RangeError(f"Bloch vector {b.tolist()} lies outside the unit ball")
    return float(np.linalg.norm(b1 + b2) + np.linalg.norm(b1 - b2)) <= 2 + tol
