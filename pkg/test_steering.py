"""
Tests for assemblage validation, induced assemblages and LHS decisions.
"""
import math

import numpy as np
import pytest

from app.core.errors import DimensionMismatch, InvalidAssemblage, InvalidState
from app.models.assemblage import Assemblage
from app.services.bridge import assemblage_of
from app.services.hermitian import identity, max_entangled, random_density, tensor
from app.services.incompatibility import jm_robustness
from app.services.measurements import depolarize, random_measurement_set, standard_set
from app.services.steering import (
    depolarize_assemblage,
    induced_assemblage,
    lhs_feasible,
    require_density,
    steering_robustness,
    validate_assemblage,
)
from conftest import SQRT_HALF


def test_induced_assemblage_is_valid(rng):
    state = random_density(6, rng)
    asm = induced_assemblage(state, random_measurement_set(2, [2, 3], rng))
    report = validate_assemblage(asm)
    assert report.passed
    assert asm.dim_b == 3


def test_induced_from_max_entangled_matches_transpose_map():
    measurements = standard_set("pauli_xyz", eta=0.8)
    induced = induced_assemblage(max_entangled(2), measurements)
    bridged = assemblage_of(measurements)
    for row_a, row_b in zip(induced.members, bridged.members):
        for a, b in zip(row_a, row_b):
            np.testing.assert_allclose(a, b, atol=1e-12)


def test_signaling_assemblage_is_rejected():
    asm = Assemblage([[np.diag([0.5, 0]), np.diag([0, 0.5])], [np.diag([0.5, 0.0]), np.diag([0.0, 0.0])]])
    report = validate_assemblage(asm)
    assert not report.passed
    assert report.no_signaling_defect == pytest.approx(0.5)
    with pytest.raises(InvalidAssemblage):
        lhs_feasible(asm)


def test_bad_states_are_rejected(rng):
    with pytest.raises(InvalidState):
        require_density(np.diag([0.7, 0.7, -0.4, 0.0]))
    with pytest.raises(InvalidState):
        require_density(2 * random_density(4, rng))
    with pytest.raises(DimensionMismatch):
        induced_assemblage(random_density(5, rng), standard_set("pauli_xz"))


def test_product_state_is_unsteerable(rng):
    state = tensor(random_density(2, rng), random_density(2, rng))
    feasible, _ = lhs_feasible(induced_assemblage(state, standard_set("pauli_xyz")))
    assert feasible


@pytest.mark.parametrize("lam, expected", [(0.7, True), (SQRT_HALF - 1e-4, True), (0.75, False)])
def test_depolarized_pauli_pair_on_max_entangled(lam, expected):
    asm = depolarize_assemblage(assemblage_of(standard_set("pauli_xz")), lam)
    feasible, certificate = lhs_feasible(asm)
    assert feasible is expected


def test_steering_robustness_of_pauli_pair():
    result = steering_robustness(assemblage_of(standard_set("pauli_xz")))
    assert result.lambda_max == pytest.approx(SQRT_HALF, abs=1e-5)


def test_steering_robustness_matches_jm_for_three_paulis():
    measurements = standard_set("pauli_xyz")
    steering = steering_robustness(assemblage_of(measurements))
    assert steering.lambda_max == pytest.approx(1 / math.sqrt(3), abs=1e-5)
    assert steering.lambda_max == pytest.approx(jm_robustness(measurements).lambda_max, abs=1e-5)


def test_bisection_mode_agrees():
    asm = assemblage_of(standard_set("pauli_xz"))
    direct = steering_robustness(asm)
    bisection = steering_robustness(asm, mode="bisection")
    assert bisection.lambda_max == pytest.approx(direct.lambda_max, abs=1e-5)


def test_depolarize_assemblage_preserves_marginal(rng):
    state = random_density(4, rng)
    asm = induced_assemblage(state, random_measurement_set(2, [2, 2], rng))
    noisy = depolarize_assemblage(asm, 0.3)
    np.testing.assert_allclose(noisy.marginal(0), asm.marginal(0), atol=1e-12)
    np.testing.assert_allclose(noisy.traces(), asm.traces(), atol=1e-12)


def test_coexistence_pair_is_steerable():
    feasible, certificate = lhs_feasible(assemblage_of(standard_set("coexistence_c3_pair")))
    assert not feasible
    assert certificate.separation is not None and certificate.separation > 0


def test_fully_noisy_assemblage_is_unsteerable(rng):
    asm = assemblage_of(depolarize(random_measurement_set(3, [3, 3], rng), 0.0))
    np.testing.assert_allclose(asm.marginal(0), identity(3) / 3, atol=1e-12)
    assert lhs_feasible(asm)[0]


def test_pauli_pair_bisection_reaches_the_threshold():
    result = steering_robustness(assemblage_of(standard_set("pauli_xz")), mode="bisection")
    assert result.lambda_max == pytest.approx(SQRT_HALF, abs=1e-5)
    assert result.primal.feasible
    assert result.witness is not None and not result.witness.feasible


def test_jointly_measurable_sets_never_steer(rng):
    alice = standard_set("pauli_xz", eta=0.5)
    for _ in range(20):
        d_b = int(rng.integers(2, 4))
        asm = induced_assemblage(random_density(2 * d_b, rng), alice)
        feasible, _ = lhs_feasible(asm)
        assert feasible
