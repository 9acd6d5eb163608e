"""
Fermat-Torricelli point and the steering inequality for three unbiased
dichotomic qubit measurements: the data is steerable iff

    sum_i |y_i - z_FT| > 4,

where y_i are the four signed sums of Bob's Bloch vectors and z_FT minimizes
the sum of distances to them.
"""
from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import (
    BiasedMeasurement,
    DimensionMismatch,
    NonConvergence,
    NonMaximallyMixedMarginal,
    RangeError,
)
from app.models.assemblage import Assemblage
from app.models.results import FtInstance, FtReport, Verdict
from app.services.hermitian import bloch, identity

STEERING_BOUND = 4.0
_COINCIDENT = 1e-12


def _merge(anchors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    points, weights = [], []
    for y in anchors:
        for i, p in enumerate(points):
            if np.linalg.norm(p - y) <= _COINCIDENT:
                weights[i] += 1.0
                break
        else:
            points.append(y.copy())
            weights.append(1.0)
    return np.array(points), np.array(weights)


def _pull(z: np.ndarray, points: np.ndarray, weights: np.ndarray, skip: Optional[int] = None) -> np.ndarray:
    """sum_j w_j (y_j - z) / |y_j - z| over anchors other than `skip`."""
    total = np.zeros_like(z)
    for j, (y, w) in enumerate(zip(points, weights)):
        if j == skip:
            continue
        total += w * (y - z) / np.linalg.norm(y - z)
    return total


def _subgradient_norm(z: np.ndarray, points: np.ndarray, weights: np.ndarray) -> float:
    """Distance from zero to the subdifferential of the weighted distance sum at z."""
    distances = np.linalg.norm(points - z, axis=1)
    at = np.flatnonzero(distances <= _COINCIDENT)
    if at.size:
        k = int(at[0])
        return max(0.0, float(np.linalg.norm(_pull(z, points, weights, skip=k))) - weights[k])
    return float(np.linalg.norm(_pull(z, points, weights)))


def _cost(z: np.ndarray, points: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sum(weights * np.linalg.norm(points - z, axis=1)))


def ft_point(
    anchors: Sequence[Sequence[float]],
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> Tuple[np.ndarray, float]:
    """Minimizer of the sum of distances to the anchors and the minimal sum.

    Weiszfeld iteration in the Vardi-Zhang form, started at the centroid.
    Duplicate anchors are merged into weights and every anchor is first tested
    for subgradient optimality.
    """
    tol = settings.ft_tol if tol is None else tol
    max_iter = settings.ft_max_iter if max_iter is None else max_iter
    raw = np.asarray(anchors, dtype=float)
    if raw.ndim != 2 or len(raw) == 0:
        raise RangeError("at least one anchor is required")
    points, weights = _merge(raw)

    for i, (y, w) in enumerate(zip(points, weights)):
        if np.linalg.norm(_pull(y, points, weights, skip=i)) <= w:
            return y.copy(), _cost(y, points, weights)

    z = weights @ points / weights.sum()
    for iteration in range(max_iter):
        distances = np.linalg.norm(points - z, axis=1)
        at = np.flatnonzero(distances <= _COINCIDENT)
        if at.size:
            # Vardi-Zhang step off an anchor that is not optimal
            k = int(at[0])
            others = np.arange(len(points)) != k
            inv = weights[others] / distances[others]
            pulled = inv @ points[others] / inv.sum()
            r = np.linalg.norm(_pull(z, points, weights, skip=k))
            ratio = weights[k] / r
            z_next = max(0.0, 1 - ratio) * pulled + min(1.0, ratio) * z
        else:
            gradient = _pull(z, points, weights)
            if np.linalg.norm(gradient) <= tol:
                logger.debug("ft_point converged after {} iterations", iteration)
                return z, _cost(z, points, weights)
            inv = weights / distances
            z_next = inv @ points / inv.sum()
        if np.array_equal(z_next, z):
            residual = _subgradient_norm(z, points, weights)
            if residual <= tol:
                logger.debug("ft_point reached a numerical fixed point after {} iterations", iteration)
                return z, _cost(z, points, weights)
            raise NonConvergence(f"Weiszfeld iteration stalled with subgradient norm {residual:.2e} above {tol:g}")
        z = z_next
    raise NonConvergence(f"Weiszfeld iteration did not reach tolerance {tol:g} in {max_iter} iterations")


def _check_instance(inst: FtInstance) -> None:
    for name in ("x1", "x2", "x3"):
        vec = np.asarray(getattr(inst, name))
        if np.linalg.norm(vec) > 1 + 1e-9:
            raise RangeError(f"{name} = {vec.tolist()} lies outside the Bloch ball")


def ft_steering_value(inst: FtInstance) -> float:
    """Sum of the distances from the four anchors to their Fermat-Torricelli point."""
    _check_instance(inst)
    _, value = ft_point(inst.anchors())
    return value


def ft_verdict(value: float, tol: float = 1e-9) -> Verdict:
    if abs(value - STEERING_BOUND) <= tol:
        return "marginal"
    return "steerable" if value > STEERING_BOUND else "not_steerable"


def ft_report(inst: FtInstance) -> FtReport:
    _check_instance(inst)
    anchors = inst.anchors()
    point, value = ft_point(anchors)
    return FtReport(
        value=value,
        point=tuple(float(c) for c in point),
        anchors=[tuple(float(c) for c in y) for y in anchors],
        verdict=ft_verdict(value),
    )


def ft_from_assemblage(asm: Assemblage, tol: Optional[float] = None) -> FtInstance:
    """Bloch vectors of Bob's normalized '+' conditional states."""
    tol = settings.marginal_tol if tol is None else tol
    if asm.dim_b != 2:
        raise DimensionMismatch(f"the criterion needs a qubit on Bob's side, got dimension {asm.dim_b}")
    if asm.outcome_counts != [2, 2, 2]:
        raise DimensionMismatch(f"the criterion needs three dichotomic measurements, got {asm.outcome_counts}")
    defect = float(np.max(np.abs(asm.marginal(0) - identity(2) / 2)))
    if defect > tol:
        raise NonMaximallyMixedMarginal(f"rho_B differs from 1/2 by {defect:.3e}")
    vectors = []
    for k, row in enumerate(asm.members):
        b = bloch(row[0])
        if abs(b.weight - 0.5) > tol:
            raise BiasedMeasurement(f"measurement {k} has tr sigma_+ = {b.weight:.12g}, expected 1/2")
        vectors.append(tuple(float(c) for c in b.normalized()))
    return FtInstance(x1=vectors[0], x2=vectors[1], x3=vectors[2])
