"""
Tests for the conic kernel: solve, independent verification and the debug dump.
"""
import copy
import dataclasses
import math

import numpy as np
import pytest

from app.core.config import settings
from app.core.errors import ShapeMismatch
from app.models.conic import Block, CertificateStatus, ConicProblem, Equality, Scalar, ScalarTerm, Term
from app.services import conic
from app.services.hermitian import identity
from app.services.measurements import standard_set
from app.services.strategies import decomposition_problem


def forced_identity() -> ConicProblem:
    return ConicProblem(
        blocks=(Block("X", 2),),
        equalities=(Equality("unit", identity(2), (Term("X"),)),),
        name="forced",
    )


def negative_scalar() -> ConicProblem:
    return ConicProblem(
        blocks=(Block("x", 1),),
        equalities=(Equality("neg", -np.ones((1, 1), dtype=complex), (Term("x"),)),),
        name="negative",
    )


def jm_problem(eta: float) -> ConicProblem:
    measurements = standard_set("pauli_xyz", eta=eta)
    problem, _ = decomposition_problem([list(p.effects) for p in measurements.povms], name="jm")
    return problem


def test_forced_solution_is_identity():
    problem = forced_identity()
    certificate = conic.solve(problem)
    assert certificate.status is CertificateStatus.FEASIBLE
    np.testing.assert_allclose(certificate.blocks["X"], identity(2), atol=1e-7)
    assert conic.verify(problem, certificate).passed


def test_sign_obstruction_gives_witness():
    problem = negative_scalar()
    certificate = conic.solve(problem)
    assert certificate.status is CertificateStatus.INFEASIBLE
    report = conic.verify(problem, certificate)
    assert report.passed
    assert report.separation > 0


def test_corrupted_primal_fails_verification():
    problem = forced_identity()
    certificate = conic.solve(problem)
    mutated = copy.deepcopy(certificate)
    mutated.blocks["X"] = mutated.blocks["X"].copy()
    mutated.blocks["X"][0, 0] += 0.1
    report = conic.verify(problem, mutated)
    assert not report.passed
    assert report.max_residual == pytest.approx(0.1, abs=1e-6)
    assert any("unit" in note for note in report.notes)


def test_three_pauli_witness_verifies_above_threshold():
    problem = jm_problem(0.6)
    certificate = conic.solve(problem)
    assert certificate.status is CertificateStatus.INFEASIBLE
    assert conic.verify(problem, certificate).passed


def test_mutated_witness_fails_verification():
    problem = jm_problem(0.6)
    certificate = conic.solve(problem)
    flipped = copy.deepcopy(certificate)
    flipped.dual = {label: -y for label, y in certificate.dual.items()}
    assert not conic.verify(problem, flipped).passed


def test_three_pauli_feasible_below_threshold():
    problem = jm_problem(0.5)
    certificate = conic.solve(problem)
    assert certificate.feasible
    assert conic.verify(problem, certificate).passed


def test_verify_detects_missing_block():
    problem = forced_identity()
    certificate = conic.solve(problem)
    certificate.blocks = {}
    with pytest.raises(ShapeMismatch):
        conic.verify(problem, certificate)


def test_problem_rejects_unknown_block():
    with pytest.raises(ShapeMismatch):
        ConicProblem(blocks=(Block("X", 2),), equalities=(Equality("e", identity(2), (Term("Y"),)),))


def test_scalar_objective_is_maximized():
    # X + t * 1 = 2 * 1 with X PSD and t in [0, 1]: optimum t = 1
    problem = ConicProblem(
        blocks=(Block("X", 2),),
        equalities=(Equality("e", 2 * identity(2), (Term("X"),), (ScalarTerm("t", identity(2)),)),),
        scalars=(Scalar("t", lower=0.0, upper=1.0),),
        objective={"t": 1.0},
    )
    certificate = conic.solve(problem)
    assert certificate.scalars["t"] == pytest.approx(1.0, abs=1e-7)


def test_monotone_feasibility_in_noise():
    threshold = 1 / math.sqrt(3)
    verdicts = [conic.solve(jm_problem(eta)).feasible for eta in (0.3, 0.5, threshold - 1e-3, threshold + 1e-3, 0.8)]
    assert verdicts == [True, True, True, False, False]


def test_certificate_digest_is_stable():
    problem = forced_identity()
    first, second = conic.solve(problem), conic.solve(problem)
    assert first.digest() == second.digest()


def test_dump_problem_layout():
    dump = conic.dump_problem(forced_identity())
    assert dump["blocks"] == [{"name": "X", "dim": 2}]
    entries = dump["equalities"][0]["target"]["entries"]
    assert sorted((r, c) for r, c, _, _ in entries) == [(0, 0), (1, 1)]


def _unbounded(problem: ConicProblem) -> ConicProblem:
    return dataclasses.replace(problem, blocks=tuple(Block(b.name, b.dim) for b in problem.blocks))


def test_decomposition_blocks_carry_trace_bounds():
    problem = jm_problem(0.6)
    assert all(b.trace_bound == pytest.approx(2.0) for b in problem.blocks)


def test_slightly_negative_adjoint_is_charged_against_separation():
    problem = jm_problem(0.6)
    certificate = conic.solve(problem)
    _, lowest, _ = conic.witness_functional(problem, certificate.dual)
    # shifting every multiplier by -eps * 1 moves each block adjoint by -3 eps
    eps = (lowest + 1e-6) / 3
    shifted = copy.deepcopy(certificate)
    shifted.dual = {label: y - eps * identity(2) for label, y in certificate.dual.items()}
    _, shifted_lowest, _ = conic.witness_functional(problem, shifted.dual)
    assert shifted_lowest == pytest.approx(-1e-6, abs=1e-9)

    report = conic.verify(problem, shifted)
    assert report.passed
    assert report.separation > 0
    assert not conic.verify(_unbounded(problem), shifted).passed


def test_polish_removes_small_equality_residuals(rng):
    problem = forced_identity()
    certificate = conic.solve(problem)
    noisy = copy.deepcopy(certificate)
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    noisy.blocks["X"] = certificate.blocks["X"] + 1e-7 * (g + g.conj().T)
    assert not conic.verify(problem, noisy).passed

    polished = conic._polish(problem, noisy)
    assert polished is not None
    np.testing.assert_allclose(polished.blocks["X"], identity(2), atol=1e-12)
    assert conic.verify(problem, polished).passed


def test_polish_is_skipped_for_large_problems(monkeypatch):
    monkeypatch.setattr(settings, "polish_max_columns", 2)
    problem = forced_identity()
    assert conic._polish(problem, conic.solve(problem)) is None
