"""
POVM validation, the white-noise map and the named constructions.
"""
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import InvalidMeasurement, RangeError, UnknownName
from app.models.measurement import MeasurementSet, Povm
from app.models.results import PovmReport
from app.services.hermitian import (
    PAULI_X,
    PAULI_Z,
    identity,
    ket,
    min_eigenvalue,
    projector,
    qubit_effect,
    random_psd,
    random_unitary,
)


def validate_povm(p: Povm, tol: Optional[float] = None) -> PovmReport:
    """Check positivity of every effect and completeness, reporting the worst violations."""
    tol = settings.psd_tol if tol is None else tol
    lowest = [min_eigenvalue(e) for e in p.effects]
    worst = int(np.argmin(lowest))
    completeness = float(np.max(np.abs(p.total() - identity(p.dim))))
    hermiticity = max(float(np.max(np.abs(e - e.conj().T))) for e in p.effects)
    return PovmReport(
        passed=lowest[worst] >= -tol and completeness <= tol and hermiticity <= tol,
        min_eigenvalue=lowest[worst],
        worst_effect=worst,
        completeness_defect=completeness,
        hermiticity_defect=hermiticity,
        tol=tol,
    )


def validate_set(measurements: MeasurementSet, tol: Optional[float] = None) -> List[PovmReport]:
    return [validate_povm(p, tol) for p in measurements.povms]


def require_valid(measurements: MeasurementSet, tol: Optional[float] = None) -> None:
    for k, report in enumerate(validate_set(measurements, tol)):
        if not report.passed:
            raise InvalidMeasurement(
                f"measurement {k} is not a POVM (min eigenvalue {report.min_eigenvalue:.3e}, "
                f"completeness defect {report.completeness_defect:.3e})"
            )


def depolarize_effect(effect: np.ndarray, lam: float) -> np.ndarray:
    d = effect.shape[0]
    return lam * effect + (1 - lam) / d * np.trace(effect) * identity(d)


def depolarize(measurements: MeasurementSet, lam: float) -> MeasurementSet:
    """A(x) -> lam A(x) + (1 - lam) tr[A(x)] 1 / d, effect-wise."""
    if not 0.0 <= lam <= 1.0:
        raise RangeError(f"noise parameter {lam} outside [0, 1]")
    return MeasurementSet.from_effects(
        [[depolarize_effect(e, lam) for e in p.effects] for p in measurements.povms]
    )


def marginalize(parent: Povm, shape: Sequence[int], axis: int) -> Povm:
    """Sum a product-outcome POVM (row-major over `shape`) down to one axis."""
    grid = np.array(parent.effects).reshape(*shape, parent.dim, parent.dim)
    others = tuple(i for i in range(len(shape)) if i != axis)
    summed = grid.sum(axis=others) if others else grid
    return Povm(list(summed))


def _dichotomic(vec: Sequence[float]) -> Povm:
    v = np.asarray(vec, dtype=float)
    return Povm([qubit_effect(v), qubit_effect(-v)])


def _pauli_xz(eta: float = 1.0) -> MeasurementSet:
    return MeasurementSet([_dichotomic([eta, 0, 0]), _dichotomic([0, 0, eta])])


def _pauli_xyz(eta: float = 1.0) -> MeasurementSet:
    return MeasurementSet([_dichotomic(eta * np.eye(3)[k]) for k in range(3)])


def _spin_directions(directions: Sequence[Sequence[float]], eta: float = 1.0) -> MeasurementSet:
    povms = []
    for n in directions:
        n = np.asarray(n, dtype=float)
        if abs(np.linalg.norm(n) - 1) > 1e-9:
            raise RangeError(f"direction {n.tolist()} is not a unit vector")
        povms.append(_dichotomic(eta * n))
    return MeasurementSet(povms)


def _c3_phi() -> np.ndarray:
    return projector(np.ones(3) / np.sqrt(3))


def _coexistence_c3_pair() -> MeasurementSet:
    one = identity(3)
    a1 = [(one - np.outer(ket(3, i), ket(3, i))) / 2 for i in range(3)]
    a2_first = _c3_phi() / 2
    return MeasurementSet([Povm(a1), Povm([a2_first, one - a2_first])])


def _coexistence_c3_parent() -> MeasurementSet:
    one = identity(3)
    phi = _c3_phi()
    effects = [np.outer(ket(3, i), ket(3, i)) / 2 for i in range(3)] + [phi / 2, (one - phi) / 2]
    return MeasurementSet([Povm(effects)])


def _smeared_joint_g() -> MeasurementSet:
    # outcome index 2*a + b for (i, j) = (+-1, +-1), index 0 meaning +1
    effects = []
    for i in (1, -1):
        for j in (1, -1):
            effects.append((identity(2) + i / np.sqrt(2) * PAULI_X + j / np.sqrt(2) * PAULI_Z) / 4)
    return MeasurementSet([Povm(effects)])


def mub_vectors(d: int, count: int) -> List[np.ndarray]:
    """`count` mutually unbiased bases of C^d as unitary matrices with basis vectors as columns."""
    if count < 1 or count > d + 1:
        raise RangeError(f"between 1 and {d + 1} mutually unbiased bases exist in dimension {d}")
    if d == 2:
        bases = [
            np.eye(2, dtype=complex),
            np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
            np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2),
        ]
        return bases[:count]
    if d < 2 or any(d % p == 0 for p in range(2, int(np.sqrt(d)) + 1)):
        raise RangeError(f"mub construction needs d = 2 or an odd prime, got {d}")
    omega = np.exp(2j * np.pi / d)
    bases = [np.eye(d, dtype=complex)]
    k = np.arange(d)
    for m in range(d):
        columns = [omega ** ((m * k * k + j * k) % d) / np.sqrt(d) for j in range(d)]
        bases.append(np.array(columns).T)
    return bases[:count]


def _mub(d: int = 2, count: int = 2, eta: float = 1.0) -> MeasurementSet:
    povms = [Povm([projector(basis[:, j]) for j in range(d)]) for basis in mub_vectors(d, count)]
    sharp = MeasurementSet(povms)
    return sharp if eta == 1.0 else depolarize(sharp, eta)


_STANDARD: Dict[str, Callable[..., MeasurementSet]] = {
    "pauli_xz": _pauli_xz,
    "pauli_xyz": _pauli_xyz,
    "spin_directions": _spin_directions,
    "coexistence_c3_pair": _coexistence_c3_pair,
    "coexistence_c3_parent": _coexistence_c3_parent,
    "smeared_joint_G": _smeared_joint_g,
    "mub": _mub,
}


def standard_names() -> List[str]:
    return sorted(_STANDARD)


def standard_set(name: str, **params: Any) -> MeasurementSet:
    """Named construction; params are forwarded (eta, directions, d, count)."""
    try:
        factory = _STANDARD[name]
    except KeyError:
        raise UnknownName(f"unknown standard set {name!r}; known: {', '.join(standard_names())}")
    try:
        return factory(**params)
    except TypeError as exc:
        raise UnknownName(f"bad parameters for {name!r}: {exc}")


def random_povm(d: int, n_outcomes: int, rng: np.random.Generator) -> Povm:
    """W_x random PSD, A_x = S^{-1/2} W_x S^{-1/2} with S = sum_x W_x."""
    weights = [random_psd(d, rng) for _ in range(n_outcomes)]
    values, vectors = np.linalg.eigh(np.sum(weights, axis=0))
    inv_sqrt = vectors @ np.diag(values ** -0.5) @ vectors.conj().T
    effects = [inv_sqrt @ w @ inv_sqrt for w in weights]
    return Povm([(e + e.conj().T) / 2 for e in effects])


def random_measurement_set(d: int, outcome_counts: Sequence[int], rng: np.random.Generator) -> MeasurementSet:
    return MeasurementSet([random_povm(d, n, rng) for n in outcome_counts])


def random_pvm(d: int, rng: np.random.Generator) -> Povm:
    """Rank-one projectors onto the columns of a Haar-random unitary."""
    u = random_unitary(d, rng)
    return Povm([np.outer(u[:, i], u[:, i].conj()) for i in range(d)])


def random_pvm_set(d: int, n: int, rng: np.random.Generator) -> MeasurementSet:
    return MeasurementSet([random_pvm(d, rng) for _ in range(n)])


def random_unbiased_qubit_set(n: int, rng: np.random.Generator, max_norm: float = 1.0) -> MeasurementSet:
    """Dichotomic unbiased qubit measurements (1 +- b.sigma)/2 with |b| <= max_norm."""
    povms = []
    for _ in range(n):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        povms.append(_dichotomic(direction * max_norm * rng.uniform() ** (1 / 3)))
    return MeasurementSet(povms)
