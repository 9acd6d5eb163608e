"""
JSON payloads shared by the command line and the HTTP API.

Every builder returns a Report: the payload plus whether the verdict is
positive, which the CLI turns into exit code 0 or 1.
"""
from dataclasses import dataclass
from typing import Any, Iterable, Optional

import numpy as np

from app.core.config import settings
from app.models.assemblage import Assemblage
from app.models.conic import SolverTolerances
from app.models.measurement import MeasurementSet
from app.models.results import FtInstance, StateFamilyPoint
from app.services import bridge, conic, fermat_torricelli, incompatibility, lhv, steering
from app.services.measurements import standard_set
from app.services.strategies import decomposition_problem


@dataclass
class Report:
    payload: dict
    positive: bool = True


def round_sig(value: Any, digits: Optional[int] = None) -> Any:
    """Round every float in a nested payload to `digits` significant digits."""
    digits = settings.sig_digits if digits is None else digits
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            return None
        return float(f"{float(value):.{digits}g}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, dict):
        return {k: round_sig(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_sig(v, digits) for v in value]
    return value


def _verdict_payload(verdict: str, certificate, problem, tol: Optional[float]) -> dict:
    report = conic.verify(problem, certificate, None if tol is None else SolverTolerances(feasibility=tol))
    return {
        "verdict": verdict,
        "certificate": certificate.to_payload(include_values=False),
        "verification": report.model_dump(mode="json"),
    }


def jm_check(measurements: MeasurementSet, tol: Optional[float] = None) -> Report:
    feasible, certificate = incompatibility.jm_feasible(measurements, tol)
    problem, _ = decomposition_problem([list(p.effects) for p in measurements.povms], name="jm")
    verdict = "jointly_measurable" if feasible else "not_jointly_measurable"
    return Report(_verdict_payload(verdict, certificate, problem, tol), positive=feasible)


def jm_problem_dump(measurements: MeasurementSet) -> dict:
    problem, _ = decomposition_problem([list(p.effects) for p in measurements.povms], name="jm")
    return conic.dump_problem(problem)


def jm_robustness(
    measurements: MeasurementSet,
    mode: str = "direct",
    oracle: str = "sdp",
    tol: Optional[float] = None,
) -> Report:
    result = incompatibility.jm_robustness(measurements, mode=mode, oracle=oracle, tol=tol)
    return Report(result.to_payload())


def jm_parent(measurements: MeasurementSet, lam: float = 1.0, tol: Optional[float] = None) -> Report:
    parent = incompatibility.parent_povm(measurements, lam, tol)
    payload = {
        "lambda": lam,
        "outcomes": [list(s) for s in parent.post.strategies],
        "parent": MeasurementSet([parent.povm]).to_payload(name="parent").model_dump(),
        "residual": parent.residual,
    }
    return Report(payload)


def steer_check(asm: Assemblage, tol: Optional[float] = None) -> Report:
    feasible, certificate = steering.lhs_feasible(asm, tol)
    problem, _ = decomposition_problem([list(row) for row in asm.members], name="lhs")
    verdict = "not_steerable" if feasible else "steerable"
    return Report(_verdict_payload(verdict, certificate, problem, tol), positive=not feasible)


def steer_robustness(asm: Assemblage, mode: str = "direct", tol: Optional[float] = None) -> Report:
    return Report(steering.steering_robustness(asm, mode=mode, tol=tol).to_payload())


def to_assemblage(measurements: MeasurementSet) -> Report:
    return Report(bridge.assemblage_of(measurements).to_payload().model_dump(exclude_none=True))


def to_measurements(asm: Assemblage) -> Report:
    return Report(bridge.measurements_of(asm).to_payload().model_dump(exclude_none=True))


def duality_check(state: np.ndarray, measurements: MeasurementSet, lam: float) -> Report:
    gap = bridge.noise_duality_check(state, measurements, lam)
    return Report({"lambda": lam, "discrepancy": gap, "passed": gap <= 1e-10}, positive=gap <= 1e-10)


def threshold(d: int) -> Report:
    return Report(bridge.pvm_threshold(d).model_dump())


def povm_noise(d: int, n_measurements: int = 2, n_outcomes: int = 2, samples: int = 20, seed: int = 0) -> Report:
    rows = bridge.povm_noise_experiment(d, n_measurements, n_outcomes, samples, seed)
    above = sum(row.above_threshold for row in rows)
    return Report({"rows": [row.model_dump() for row in rows], "above_threshold": above, "samples": len(rows)})


def ft_eval(inst: FtInstance) -> Report:
    report = fermat_torricelli.ft_report(inst)
    payload = report.model_dump()
    payload["instance"] = inst.model_dump()
    return Report(payload, positive=report.verdict == "steerable")


def ft_eval_assemblage(asm: Assemblage) -> Report:
    return ft_eval(fermat_torricelli.ft_from_assemblage(asm))


def lhv_decompose(
    point: StateFamilyPoint,
    classes: Iterable[str] = lhv.DEFAULT_CLASSES,
    n_bob: Optional[int] = None,
    robust: bool = False,
    symmetry: Optional[str] = None,
    ppt: Optional[bool] = None,
) -> Report:
    result = lhv.lhv_decompose(point, classes, n_bob, robust=robust, symmetry=symmetry, ppt=ppt)
    payload = {"target": point.to_payload(), **result.to_payload()}
    return Report(payload, positive=result.feasible)


def stdlib(name: str, **params: Any) -> Report:
    return Report(standard_set(name, **params).to_payload(name=name).model_dump())
