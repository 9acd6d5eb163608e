"""
Maps between measurement sets and assemblages of the maximally entangled
state, the state/measurement noise duality and the PVM noise threshold.
"""
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import DimensionMismatch, MarginalNotMaximallyMixed, RangeError
from app.models.assemblage import Assemblage
from app.models.measurement import MeasurementSet
from app.models.results import PovmNoiseRow, ThresholdTable
from app.services.hermitian import identity, max_norm, partial_trace, tensor, transpose
from app.services.incompatibility import jm_robustness
from app.services.measurements import depolarize, random_measurement_set, require_valid
from app.services.steering import induced_assemblage, require_density


def assemblage_of(measurements: MeasurementSet) -> Assemblage:
    """sigma_{x|k} = A_k(x)^T / d, the assemblage of |phi+> without building it."""
    require_valid(measurements)
    d = measurements.dim
    return Assemblage([[transpose(e) / d for e in p.effects] for p in measurements.povms])


def measurements_of(asm: Assemblage, tol: Optional[float] = None) -> MeasurementSet:
    """A_k(x) = d sigma_{x|k}^T; needs rho_B = 1/d."""
    tol = settings.marginal_tol if tol is None else tol
    d = asm.dim_b
    defect = float(np.max(np.abs(asm.marginal(0) - identity(d) / d)))
    if defect > tol:
        raise MarginalNotMaximallyMixed(f"rho_B differs from 1/{d} by {defect:.3e}")
    return MeasurementSet.from_effects([[d * transpose(s) for s in row] for row in asm.members])


def _split(state: np.ndarray, d_a: int) -> Tuple[int, int]:
    if state.shape[0] % d_a:
        raise DimensionMismatch(f"state dimension {state.shape[0]} is not a multiple of {d_a}")
    return d_a, state.shape[0] // d_a


def depolarize_state(state: np.ndarray, dims: Tuple[int, int], lam: float) -> np.ndarray:
    """lam rho + (1 - lam) 1/d_A (x) tr_A rho."""
    if not 0.0 <= lam <= 1.0:
        raise RangeError(f"noise parameter {lam} outside [0, 1]")
    d_a, d_b = dims
    if state.shape[0] != d_a * d_b:
        raise DimensionMismatch(f"state of dimension {state.shape[0]} is not {d_a}x{d_b}")
    return lam * state + (1 - lam) * tensor(identity(d_a) / d_a, partial_trace(state, dims, keep="B"))


def noise_duality_check(state: np.ndarray, alice: MeasurementSet, lam: float) -> float:
    """Max-norm gap between noisy-state and noisy-measurement assemblages."""
    state = require_density(state)
    dims = _split(state, alice.dim)
    noisy_state = induced_assemblage(depolarize_state(state, dims, lam), alice)
    noisy_measurements = induced_assemblage(state, depolarize(alice, lam))
    return max(
        max_norm(a, b)
        for row_a, row_b in zip(noisy_state.members, noisy_measurements.members)
        for a, b in zip(row_a, row_b)
    )


def pvm_threshold(d: int) -> ThresholdTable:
    """H_d and (H_d - 1) / (d - 1), exact and as floats."""
    if d < 2:
        raise RangeError(f"the threshold needs d >= 2, got {d}")
    harmonic = sum(Fraction(1, n) for n in range(1, d + 1))
    lambda_star = (harmonic - 1) / (d - 1)
    return ThresholdTable(
        d=d,
        harmonic=float(harmonic),
        lambda_star=float(lambda_star),
        harmonic_exact=str(harmonic),
        lambda_star_exact=str(lambda_star),
    )


def povm_noise_experiment(
    d: int,
    n_measurements: int = 2,
    n_outcomes: int = 2,
    samples: int = 20,
    seed: int = 0,
) -> List[PovmNoiseRow]:
    """Robustness of random POVM sets compared with the PVM threshold; reported, never asserted."""
    rng = np.random.default_rng(seed)
    threshold = pvm_threshold(d).lambda_star
    rows = []
    for sample in range(samples):
        measurements = random_measurement_set(d, [n_outcomes] * n_measurements, rng)
        lam = jm_robustness(measurements).lambda_max
        rows.append(
            PovmNoiseRow(sample=sample, d=d, lambda_max=lam, lambda_star=threshold, above_threshold=lam >= threshold)
        )
        logger.info("povm noise sample {}: lambda_max = {:.6f} (lambda* = {:.6f})", sample, lam, threshold)
    return rows
