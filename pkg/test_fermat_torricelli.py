"""
Tests for the Fermat-Torricelli point and the three-measurement steering criterion.
"""
import math

import numpy as np
import pytest

from app.core.errors import BiasedMeasurement, DimensionMismatch, NonConvergence, NonMaximallyMixedMarginal, RangeError
from app.models.assemblage import Assemblage
from app.models.results import FtInstance
from app.services.bridge import assemblage_of
from app.services.fermat_torricelli import (
    _subgradient_norm,
    ft_from_assemblage,
    ft_point,
    ft_report,
    ft_steering_value,
    ft_verdict,
)
from app.services.hermitian import identity, qubit_effect
from app.services.incompatibility import qubit_pair_unbiased_criterion
from app.services.measurements import random_unbiased_qubit_set, standard_set
from app.services.steering import lhs_feasible


def cost(z, anchors):
    return float(np.sum(np.linalg.norm(np.asarray(anchors) - z, axis=1)))


def orthogonal(eta: float) -> FtInstance:
    return FtInstance(x1=(eta, 0, 0), x2=(0, eta, 0), x3=(0, 0, eta))


def test_tetrahedron_point_is_origin():
    eta = 0.4
    anchors = [(eta, eta, eta), (eta, -eta, -eta), (-eta, eta, -eta), (-eta, -eta, eta)]
    point, value = ft_point(anchors)
    np.testing.assert_allclose(point, 0, atol=1e-9)
    assert value == pytest.approx(4 * eta * math.sqrt(3))


def test_single_anchor():
    point, value = ft_point([(0.3, -0.2, 0.1)])
    np.testing.assert_allclose(point, (0.3, -0.2, 0.1))
    assert value == 0.0


def test_rectangle_diagonals_meet_at_the_point():
    point, value = ft_point([(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)])
    np.testing.assert_allclose(point, (0.5, 0.5, 0), atol=1e-8)
    assert value == pytest.approx(2 * math.sqrt(2), abs=1e-9)


def test_optimal_anchor_is_returned_directly():
    # the middle anchor of a collinear triple is the minimizer
    point, value = ft_point([(-1, 0, 0), (0, 0, 0), (2, 0, 0)])
    np.testing.assert_allclose(point, (0, 0, 0))
    assert value == pytest.approx(3.0)


def test_perturbation_never_improves(rng):
    for _ in range(5):
        anchors = rng.normal(size=(4, 3))
        point, value = ft_point(anchors)
        assert value == pytest.approx(cost(point, anchors), abs=1e-12)
        directions = rng.normal(size=(100, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        for d in directions:
            assert cost(point + 1e-4 * d, anchors) >= value - 1e-8


def test_iteration_budget_is_enforced():
    anchors = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (3, 3, 3)]
    with pytest.raises(NonConvergence):
        ft_point(anchors, tol=1e-15, max_iter=2)


def test_empty_anchor_list():
    with pytest.raises(RangeError):
        ft_point([])


@pytest.mark.parametrize("eta", [0.3, 0.5, 0.6, 0.9])
def test_orthogonal_axes_closed_form(eta):
    assert ft_steering_value(orthogonal(eta)) == pytest.approx(4 * eta * math.sqrt(3), abs=1e-9)


def test_orthogonal_axes_verdicts():
    assert ft_report(orthogonal(0.6)).verdict == "steerable"
    assert ft_report(orthogonal(0.5)).verdict == "not_steerable"
    assert ft_verdict(4.0) == "marginal"
    assert ft_verdict(4.0 + 1e-6) == "steerable"


def test_parallel_measurements_never_steer():
    eta = 0.9
    inst = FtInstance(x1=(eta, 0, 0), x2=(eta, 0, 0), x3=(0, 0, 0))
    assert ft_steering_value(inst) == pytest.approx(4 * eta)


def test_third_measurement_absent_reduces_to_pair_criterion(rng):
    for _ in range(20):
        x1, x2 = (rng.normal(size=3) for _ in range(2))
        x1 *= rng.uniform() / np.linalg.norm(x1)
        x2 *= rng.uniform() / np.linalg.norm(x2)
        inst = FtInstance(x1=tuple(x1), x2=tuple(x2), x3=(0, 0, 0))
        value = ft_steering_value(inst)
        assert value == pytest.approx(2 * (np.linalg.norm(x1 + x2) + np.linalg.norm(x1 - x2)), abs=1e-8)
        if abs(value - 4) > 1e-6:
            assert (value <= 4) == qubit_pair_unbiased_criterion(x1, x2)


def test_outside_bloch_ball_is_rejected():
    with pytest.raises(RangeError):
        ft_steering_value(FtInstance(x1=(1.2, 0, 0), x2=(0, 0, 0), x3=(0, 0, 0)))


def test_from_sharp_pauli_assemblage_flips_y():
    inst = ft_from_assemblage(assemblage_of(standard_set("pauli_xyz")))
    np.testing.assert_allclose(inst.x1, (1, 0, 0), atol=1e-12)
    np.testing.assert_allclose(inst.x2, (0, -1, 0), atol=1e-12)
    np.testing.assert_allclose(inst.x3, (0, 0, 1), atol=1e-12)


def test_isotropic_assemblage_at_half():
    inst = ft_from_assemblage(assemblage_of(standard_set("pauli_xyz", eta=0.5)))
    assert ft_steering_value(inst) == pytest.approx(2 * math.sqrt(3), abs=1e-9)


def test_biased_input_is_rejected():
    biased = [[qubit_effect((0, 0, 0.2), 0.6) / 2, qubit_effect((0, 0, -0.2), 1.4) / 2]] * 3
    with pytest.raises(BiasedMeasurement):
        ft_from_assemblage(Assemblage(biased))


def test_non_maximally_mixed_marginal_is_rejected():
    rho_b = np.diag([0.7, 0.3]).astype(complex)
    with pytest.raises(NonMaximallyMixedMarginal):
        ft_from_assemblage(Assemblage([[rho_b / 2, rho_b / 2]] * 3))


def test_wrong_shape_is_rejected():
    with pytest.raises(DimensionMismatch):
        ft_from_assemblage(assemblage_of(standard_set("pauli_xz")))
    with pytest.raises(DimensionMismatch):
        ft_from_assemblage(Assemblage([[identity(3) / 3]] * 3))


def _agreement(rng, samples: int) -> int:
    disagreements, checked = 0, 0
    while checked < samples:
        asm = assemblage_of(random_unbiased_qubit_set(3, rng))
        value = ft_steering_value(ft_from_assemblage(asm))
        if abs(value - 4) < 1e-5:
            continue
        checked += 1
        steerable = not lhs_feasible(asm)[0]
        disagreements += int(steerable != (value > 4))
    return disagreements


def test_criterion_agrees_with_sdp(rng):
    assert _agreement(rng, 30) == 0


@pytest.mark.slow
def test_criterion_agrees_with_sdp_on_many_triples(rng):
    assert _agreement(rng, 200) == 0


def test_fixed_point_must_pass_the_optimality_check():
    eta = 0.4
    anchors = [(eta, eta, eta), (eta, -eta, -eta), (-eta, eta, -eta), (-eta, -eta, eta)]
    # the centroid is a fixed point of the iteration
    with pytest.raises(NonConvergence):
        ft_point(anchors, tol=-1.0)


def test_subgradient_vanishes_at_the_minimizer(rng):
    for _ in range(5):
        anchors = rng.normal(size=(4, 3))
        point, _ = ft_point(anchors)
        assert _subgradient_norm(point, anchors, np.ones(4)) <= 1e-8
    collinear = np.array([(-1.0, 0, 0), (0.0, 0, 0), (2.0, 0, 0)])
    assert _subgradient_norm(np.zeros(3), collinear, np.ones(3)) == 0.0
    assert _subgradient_norm(np.array([1.0, 0, 0]), collinear, np.ones(3)) > 0.5
