"""
Conic kernel: solve and independently verify PSD feasibility problems.

The primal is handed to cvxpy and, when its residuals miss the tolerance, polished
onto the equality constraints. Otherwise an explicit Farkas problem is solved for an
infeasibility witness. A certificate is only ever returned with a status that
verify() confirms.
"""
import time
from typing import Dict, List, Optional, Tuple

import cvxpy as cp
import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import NumericalFailure, ShapeMismatch
from app.models.conic import (
    CertificateStatus,
    ConicCertificate,
    ConicProblem,
    Scalar,
    SolverTolerances,
    VerificationReport,
)
from app.services.hermitian import from_real_vector, hermitian_basis, hermitian_part, to_real_vector

_PRIMAL_OK = {cp.OPTIMAL, cp.OPTIMAL_INACCURATE}


def solve(
    problem: ConicProblem,
    tolerances: Optional[SolverTolerances] = None,
    raise_on_failure: bool = True,
) -> ConicCertificate:
    """Solve the problem and return a verified certificate."""
    tol = tolerances or SolverTolerances()
    started = time.perf_counter()

    primal = _solve_primal(problem, tol)
    if primal is not None:
        report = verify(problem, primal, tol)
        if not report.passed:
            logger.debug("{}: primal answer did not verify: {}", problem.name, report.notes)
            polished = _polish(problem, primal)
            if polished is not None:
                primal, report = polished, verify(problem, polished, tol)
        if report.passed:
            logger.debug(
                "{}: feasible via {} (residual {:.2e}, min eig {:.2e}) in {:.3f}s",
                problem.name, primal.solver, report.max_residual, report.min_eigenvalue,
                time.perf_counter() - started,
            )
            return primal
        logger.debug("{}: primal answer still fails: {}", problem.name, report.notes)

    witness = _solve_farkas(problem, tol)
    if witness is not None:
        report = verify(problem, witness, tol)
        if report.passed:
            for note in report.notes:
                logger.warning("{}: {}", problem.name, note)
            logger.debug(
                "{}: infeasible via {} (separation {:.2e}) in {:.3f}s",
                problem.name, witness.solver, report.separation, time.perf_counter() - started,
            )
            return witness

    message = f"{problem.name or 'problem'}: neither a feasible point nor an infeasibility witness verified"
    if raise_on_failure:
        raise NumericalFailure(message)
    logger.warning(message)
    return ConicCertificate(status=CertificateStatus.NUMERICAL_FAILURE, solver=settings.solver)


def verify(
    problem: ConicProblem,
    certificate: ConicCertificate,
    tol: Optional[SolverTolerances] = None,
) -> VerificationReport:
    """Recompute every residual of a certificate from the problem data alone."""
    tol = tol or SolverTolerances()
    if certificate.status is CertificateStatus.FEASIBLE:
        return _verify_primal(problem, certificate, tol)
    if certificate.status is CertificateStatus.INFEASIBLE:
        return _verify_witness(problem, certificate, tol)
    return VerificationReport(passed=False, status=certificate.status, notes=["numerical failure"])


def equality_residuals(
    problem: ConicProblem,
    blocks: Dict[str, np.ndarray],
    scalars: Dict[str, float],
) -> Dict[str, float]:
    """Max-entry violation of every equality at the given point."""
    residuals = {}
    for eq in problem.equalities:
        lhs = np.zeros(eq.target.shape, dtype=complex)
        for term in eq.terms:
            lhs = lhs + term.apply(blocks[term.variable])
        for sterm in eq.scalar_terms:
            lhs = lhs + scalars[sterm.scalar] * sterm.matrix
        residuals[eq.label] = float(np.max(np.abs(lhs - eq.target)))
    return residuals


def _verify_primal(problem: ConicProblem, cert: ConicCertificate, tol: SolverTolerances) -> VerificationReport:
    _check_shapes(problem, cert)
    residuals = equality_residuals(problem, cert.blocks, cert.scalars)
    max_residual = max(residuals.values(), default=0.0)
    lowest = min(
        (float(np.linalg.eigvalsh(hermitian_part(cert.blocks[b.name]))[0]) for b in problem.blocks),
        default=0.0,
    )
    notes: List[str] = []
    bounds_ok = True
    for s in problem.scalars:
        value = cert.scalars[s.name]
        if (s.lower is not None and value < s.lower - tol.feasibility) or (
            s.upper is not None and value > s.upper + tol.feasibility
        ):
            bounds_ok = False
            notes.append(f"scalar {s.name}={value:.3e} outside [{s.lower}, {s.upper}]")
    hermitian_defect = max(
        (float(np.max(np.abs(x - x.conj().T))) for x in cert.blocks.values()), default=0.0
    )
    if hermitian_defect > tol.feasibility:
        notes.append(f"block hermiticity defect {hermitian_defect:.2e}")
    if max_residual > tol.feasibility:
        worst = max(residuals, key=residuals.get)
        notes.append(f"equality {worst!r} violated by {max_residual:.2e}")
    if lowest < -tol.feasibility:
        notes.append(f"block eigenvalue {lowest:.2e} below zero")
    objective = None
    if problem.objective:
        objective = sum(w * cert.scalars[name] for name, w in problem.objective.items())
        if cert.objective is not None and abs(cert.objective - objective) > tol.gap:
            notes.append(f"reported objective {cert.objective:.10g} differs from recomputed {objective:.10g}")
    passed = (
        max_residual <= tol.feasibility
        and lowest >= -tol.feasibility
        and bounds_ok
        and hermitian_defect <= tol.feasibility
    )
    return VerificationReport(
        passed=passed,
        status=cert.status,
        max_residual=max_residual,
        min_eigenvalue=lowest,
        objective=objective,
        notes=notes,
    )


def _adjoints(problem: ConicProblem, dual: Dict[str, np.ndarray]):
    adjoints = {b.name: np.zeros((b.dim, b.dim), dtype=complex) for b in problem.blocks}
    coefficients = {s.name: 0.0 for s in problem.scalars}
    target_value = 0.0
    for eq in problem.equalities:
        y = dual[eq.label]
        target_value += float(np.real(np.vdot(eq.target, y)))
        for term in eq.terms:
            adjoints[term.variable] = adjoints[term.variable] + term.adjoint(y)
        for sterm in eq.scalar_terms:
            coefficients[sterm.scalar] += float(np.real(np.vdot(sterm.matrix, y)))
    return adjoints, coefficients, target_value


def witness_functional(problem: ConicProblem, dual: Dict[str, np.ndarray]) -> Tuple[float, float, List[str]]:
    """(separation, lowest adjoint eigenvalue, violations) of Farkas multipliers.

    separation = sum_j min_{s_j in bounds} s_j c_j(Y) - <T, Y>; a feasible point would force
    it to be <= 0 whenever every block adjoint is PSD.
    """
    adjoints, coefficients, target_value = _adjoints(problem, dual)
    lowest = min((float(np.linalg.eigvalsh(a)[0]) for a in adjoints.values()), default=0.0)
    violations: List[str] = []
    bound_value = 0.0
    for s in problem.scalars:
        value, problem_note = _scalar_bound_value(s, coefficients[s.name])
        bound_value += value
        if problem_note:
            violations.append(problem_note)
    return bound_value - target_value, lowest, violations


def adjoint_charge(
    problem: ConicProblem,
    dual: Dict[str, np.ndarray],
    tol: SolverTolerances,
) -> Tuple[float, List[str]]:
    """Separation lost to negative adjoint eigenvalues, and the blocks that cannot be charged.

    A feasible point pairs with A*(Y) to at least -sum_b |lambda_min(A*_b(Y))| tr X_b, so a
    block with a trace bound absorbs its negative part; an unbounded block must stay within
    the feasibility tolerance.
    """
    adjoints, _, _ = _adjoints(problem, dual)
    charge = 0.0
    uncharged: List[str] = []
    for b in problem.blocks:
        low = float(np.linalg.eigvalsh(adjoints[b.name])[0])
        if low >= 0:
            continue
        if b.trace_bound is not None:
            charge += -low * b.trace_bound
        elif low < -tol.feasibility:
            uncharged.append(b.name)
    return charge, uncharged


def _scalar_bound_value(s: Scalar, c: float) -> Tuple[float, Optional[str]]:
    candidates = []
    if s.lower is not None:
        candidates.append(s.lower * c)
    elif c > 0:
        return -np.inf, f"scalar {s.name} unbounded below with coefficient {c:.2e}"
    if s.upper is not None:
        candidates.append(s.upper * c)
    elif c < 0:
        return -np.inf, f"scalar {s.name} unbounded above with coefficient {c:.2e}"
    return (min(candidates) if candidates else 0.0), None


def _verify_witness(problem: ConicProblem, cert: ConicCertificate, tol: SolverTolerances) -> VerificationReport:
    missing = [eq.label for eq in problem.equalities if eq.label not in cert.dual]
    if missing:
        raise ShapeMismatch(f"witness lacks multipliers for {missing}")
    for eq in problem.equalities:
        if cert.dual[eq.label].shape != eq.target.shape:
            raise ShapeMismatch(f"multiplier for {eq.label!r} has shape {cert.dual[eq.label].shape}")
    separation, lowest, violations = witness_functional(problem, cert.dual)
    charge, uncharged = adjoint_charge(problem, cert.dual, tol)
    margin = separation - charge
    notes = list(violations)
    if uncharged:
        notes.append(f"adjoint eigenvalue {lowest:.2e} below zero on unbounded blocks {uncharged}")
    elif charge > tol.feasibility:
        notes.append(f"negative adjoint part charged {charge:.2e} against separation {separation:.2e}")
    if abs(margin) < tol.witness:
        notes.append(f"marginal: separation {margin:.2e} within {tol.witness:.0e}")
    passed = not violations and not uncharged and margin > tol.witness
    return VerificationReport(
        passed=passed,
        status=cert.status,
        min_eigenvalue=lowest,
        separation=margin,
        notes=notes,
    )


def _check_shapes(problem: ConicProblem, cert: ConicCertificate) -> None:
    for b in problem.blocks:
        if b.name not in cert.blocks:
            raise ShapeMismatch(f"certificate lacks block {b.name!r}")
        if cert.blocks[b.name].shape != (b.dim, b.dim):
            raise ShapeMismatch(f"block {b.name!r} has shape {cert.blocks[b.name].shape}, expected {(b.dim, b.dim)}")
    for s in problem.scalars:
        if s.name not in cert.scalars:
            raise ShapeMismatch(f"certificate lacks scalar {s.name!r}")


def _solver_options(name: str, tol: SolverTolerances) -> dict:
    # residuals the solver leaves at this level are removed by _polish
    if name == cp.CLARABEL:
        return {
            "tol_gap_abs": tol.gap,
            "tol_gap_rel": tol.gap,
            "tol_feas": tol.feasibility,
            "max_iter": settings.solver_max_iter,
        }
    if name == cp.SCS:
        return {"eps_abs": tol.feasibility, "eps_rel": tol.feasibility, "max_iters": settings.scs_max_iters}
    return {}


def _realify(op: np.ndarray) -> np.ndarray:
    """Real and imaginary parts of the trailing two axes, flattened."""
    flat = op.reshape(op.shape[:-2] + (-1,))
    return np.concatenate([flat.real, flat.imag], axis=-1)


def _polish(problem: ConicProblem, cert: ConicCertificate) -> Optional[ConicCertificate]:
    """Minimum-norm correction of a primal point onto the affine equality set.

    Blocks are moved in Hermitian-basis coordinates, so they stay Hermitian; PSD-ness is
    left to verify().
    """
    sizes = [b.dim * b.dim for b in problem.blocks] + [1] * len(problem.scalars)
    n_columns = sum(sizes)
    if n_columns > settings.polish_max_columns:
        logger.debug("{}: {} coordinates, skipping polish", problem.name, n_columns)
        return None
    offsets = dict(zip([b.name for b in problem.blocks] + [s.name for s in problem.scalars], np.cumsum([0] + sizes)))
    bases = {b.name: np.array(hermitian_basis(b.dim)) for b in problem.blocks}

    rows, rhs = [], []
    for eq in problem.equalities:
        matrix = np.zeros((2 * eq.target.size, n_columns))
        for term in eq.terms:
            start = offsets[term.variable]
            images = _realify(term.apply(bases[term.variable]))
            matrix[:, start:start + images.shape[0]] += images.T
        for sterm in eq.scalar_terms:
            matrix[:, offsets[sterm.scalar]] += _realify(sterm.matrix)
        rows.append(matrix)
        rhs.append(_realify(eq.target))
    matrix, target = np.vstack(rows), np.concatenate(rhs)

    point = np.concatenate(
        [to_real_vector(cert.blocks[b.name]) for b in problem.blocks]
        + [np.array([cert.scalars[s.name]]) for s in problem.scalars]
    )
    correction = np.linalg.lstsq(matrix, target - matrix @ point, rcond=None)[0]
    point = point + correction
    logger.debug("{}: polish moved the primal by {:.2e}", problem.name, float(np.max(np.abs(correction))))

    blocks = {b.name: from_real_vector(point[offsets[b.name]:offsets[b.name] + b.dim * b.dim]) for b in problem.blocks}
    scalars = {s.name: float(point[offsets[s.name]]) for s in problem.scalars}
    residuals = equality_residuals(problem, blocks, scalars)
    objective = None
    if problem.objective:
        objective = sum(w * scalars[name] for name, w in problem.objective.items())
    return ConicCertificate(
        status=CertificateStatus.FEASIBLE,
        blocks=blocks,
        scalars=scalars,
        residual=max(residuals.values(), default=0.0),
        min_eigenvalue=min((float(np.linalg.eigvalsh(v)[0]) for v in blocks.values()), default=0.0),
        objective=objective,
        solver=cert.solver,
        solver_status=cert.solver_status,
    )


def _run(cvx_problem: cp.Problem, tol: SolverTolerances, label: str) -> Optional[str]:
    installed = cp.installed_solvers()
    for name in dict.fromkeys([settings.solver, settings.fallback_solver]):
        if name not in installed:
            logger.warning("solver {} is not installed", name)
            continue
        try:
            cvx_problem.solve(solver=name, **_solver_options(name, tol))
            logger.debug("{}: {} status {}", label, name, cvx_problem.status)
            return name
        except cp.error.SolverError as exc:
            logger.warning("{}: solver {} failed: {}", label, name, exc)
    return None


def _solve_primal(problem: ConicProblem, tol: SolverTolerances) -> Optional[ConicCertificate]:
    blocks = {b.name: cp.Variable((b.dim, b.dim), hermitian=True, name=b.name) for b in problem.blocks}
    scalars = {s.name: cp.Variable(name=s.name) for s in problem.scalars}
    constraints = [x >> 0 for x in blocks.values()]
    for s in problem.scalars:
        if s.lower is not None:
            constraints.append(scalars[s.name] >= s.lower)
        if s.upper is not None:
            constraints.append(scalars[s.name] <= s.upper)
    for eq in problem.equalities:
        lhs = 0
        for term in eq.terms:
            expr = blocks[term.variable]
            if term.left is not None:
                expr = cp.Constant(term.left) @ expr
            if term.right is not None:
                expr = expr @ cp.Constant(term.right)
            lhs = lhs + term.coefficient * expr
        for sterm in eq.scalar_terms:
            lhs = lhs + scalars[sterm.scalar] * cp.Constant(sterm.matrix)
        constraints.append(lhs == eq.target)
    if problem.objective:
        objective = cp.Maximize(sum(w * scalars[name] for name, w in problem.objective.items()))
    else:
        objective = cp.Minimize(0)
    cvx_problem = cp.Problem(objective, constraints)
    solver = _run(cvx_problem, tol, f"{problem.name}/primal")
    if solver is None or cvx_problem.status not in _PRIMAL_OK:
        return None
    values = {name: hermitian_part(np.asarray(x.value, dtype=complex)) for name, x in blocks.items()}
    scalar_values = {name: float(s.value) for name, s in scalars.items()}
    residuals = equality_residuals(problem, values, scalar_values)
    lowest = min((float(np.linalg.eigvalsh(v)[0]) for v in values.values()), default=0.0)
    objective_value = None
    if problem.objective:
        objective_value = sum(w * scalar_values[name] for name, w in problem.objective.items())
    return ConicCertificate(
        status=CertificateStatus.FEASIBLE,
        blocks=values,
        scalars=scalar_values,
        residual=max(residuals.values(), default=0.0),
        min_eigenvalue=lowest,
        objective=objective_value,
        solver=solver,
        solver_status=cvx_problem.status,
    )


def _solve_farkas(problem: ConicProblem, tol: SolverTolerances) -> Optional[ConicCertificate]:
    multipliers = {
        eq.label: cp.Variable(eq.target.shape, hermitian=True, name=f"y_{i}")
        for i, eq in enumerate(problem.equalities)
    }
    constraints = []
    for y in multipliers.values():
        eye = np.eye(y.shape[0])
        constraints += [eye - y >> 0, eye + y >> 0]

    adjoint_terms: Dict[str, list] = {b.name: [] for b in problem.blocks}
    coefficient_terms: Dict[str, list] = {s.name: [] for s in problem.scalars}
    target_terms = []
    for eq in problem.equalities:
        y = multipliers[eq.label]
        target_terms.append(cp.real(cp.trace(cp.Constant(eq.target.conj().T) @ y)))
        for term in eq.terms:
            expr = y
            if term.left is not None:
                expr = cp.Constant(term.left.conj().T) @ expr
            if term.right is not None:
                expr = expr @ cp.Constant(term.right.conj().T)
            adjoint_terms[term.variable].append(np.conj(term.coefficient) * expr)
        for sterm in eq.scalar_terms:
            coefficient_terms[sterm.scalar].append(cp.real(cp.trace(cp.Constant(sterm.matrix.conj().T) @ y)))

    for b in problem.blocks:
        if not adjoint_terms[b.name]:
            continue
        z = cp.Variable((b.dim, b.dim), hermitian=True)
        raw = sum(adjoint_terms[b.name])
        constraints += [z == (raw + cp.conj(cp.transpose(raw))) / 2, z >> 0]

    bound_terms = []
    for s in problem.scalars:
        if not coefficient_terms[s.name]:
            continue
        c = sum(coefficient_terms[s.name])
        if s.lower is None and s.upper is None:
            constraints.append(c == 0)
        elif s.upper is None:
            constraints.append(c >= 0)
            bound_terms.append(s.lower * c)
        elif s.lower is None:
            constraints.append(c <= 0)
            bound_terms.append(s.upper * c)
        else:
            u = cp.Variable()
            constraints += [u <= s.lower * c, u <= s.upper * c]
            bound_terms.append(u)

    separation = sum(bound_terms) - sum(target_terms)
    cvx_problem = cp.Problem(cp.Maximize(separation), constraints)
    solver = _run(cvx_problem, tol, f"{problem.name}/farkas")
    if solver is None or cvx_problem.status not in _PRIMAL_OK:
        return None
    dual = {label: hermitian_part(np.asarray(y.value, dtype=complex)) for label, y in multipliers.items()}
    value, lowest, _ = witness_functional(problem, dual)
    return ConicCertificate(
        status=CertificateStatus.INFEASIBLE,
        dual=dual,
        separation=value,
        min_eigenvalue=lowest,
        solver=solver,
        solver_status=cvx_problem.status,
    )


def dump_problem(problem: ConicProblem) -> dict:
    """Self-describing JSON layout with matrices as sparse [row, col, re, im] triplets."""

    def triplets(matrix: Optional[np.ndarray]):
        if matrix is None:
            return None
        rows, cols = np.nonzero(np.abs(matrix) > 0)
        return {
            "shape": list(matrix.shape),
            "entries": [[int(r), int(c), float(matrix[r, c].real), float(matrix[r, c].imag)] for r, c in zip(rows, cols)],
        }

    return {
        "name": problem.name,
        "blocks": [
            {"name": b.name, "dim": b.dim, **({"trace_bound": b.trace_bound} if b.trace_bound is not None else {})}
            for b in problem.blocks
        ],
        "scalars": [{"name": s.name, "lower": s.lower, "upper": s.upper} for s in problem.scalars],
        "objective": dict(problem.objective or {}),
        "equalities": [
            {
                "label": eq.label,
                "target": triplets(eq.target),
                "terms": [
                    {
                        "variable": t.variable,
                        "coefficient": [float(np.real(t.coefficient)), float(np.imag(t.coefficient))],
                        "left": triplets(t.left),
                        "right": triplets(t.right),
                    }
                    for t in eq.terms
                ],
                "scalar_terms": [{"scalar": st.scalar, "matrix": triplets(st.matrix)} for st in eq.scalar_terms],
            }
            for eq in problem.equalities
        ],
    }
