"""
Deterministic strategies and the decomposition SDP shared by joint
measurability and local-hidden-state models.

Both questions ask for PSD operators V_lambda, one per deterministic strategy
lambda = (x_1, ..., x_n), with

    sum_{lambda : lambda_k = x} V_lambda = T_{x|k}      for all x, k.

The robustness form replaces T by s T + (1 - s) N, with N the noise target, and
maximizes s in [0, 1].
"""
from dataclasses import dataclass
from itertools import product
from typing import Callable, List, Optional, Sequence, Tuple, Type

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import NumericalFailure, TooManyOutcomes
from app.models.conic import Block, ConicProblem, Equality, Scalar, ScalarTerm, Term

Targets = Sequence[Sequence[np.ndarray]]
NOISE_SCALAR = "lam"


@dataclass(frozen=True)
class PostProcessing:
    """Deterministic response functions D_lambda(x|k) = [x == lambda_k]."""

    outcome_counts: Tuple[int, ...]

    @property
    def strategies(self) -> List[Tuple[int, ...]]:
        return list(product(*(range(m) for m in self.outcome_counts)))

    @property
    def n_strategies(self) -> int:
        return int(np.prod(self.outcome_counts))

    def table(self, k: int) -> np.ndarray:
        """Matrix D[x, lambda] for measurement k."""
        out = np.zeros((self.outcome_counts[k], self.n_strategies))
        for i, strategy in enumerate(self.strategies):
            out[strategy[k], i] = 1.0
        return out

    def incidence(self) -> np.ndarray:
        """All response tables stacked: rows (k, x), columns lambda."""
        return np.vstack([self.table(k) for k in range(len(self.outcome_counts))])

    def apply(self, parent: Sequence[np.ndarray]) -> List[List[np.ndarray]]:
        """sum_lambda D_lambda(x|k) G(lambda) for every k, x."""
        stacked = np.asarray(parent)
        return [
            [np.tensordot(self.table(k)[x], stacked, axes=1) for x in range(m)]
            for k, m in enumerate(self.outcome_counts)
        ]


def strategy_name(strategy: Tuple[int, ...]) -> str:
    return "v_" + "_".join(str(x) for x in strategy)


def check_size(outcome_counts: Sequence[int], error: Type[TooManyOutcomes] = TooManyOutcomes) -> PostProcessing:
    post = PostProcessing(tuple(outcome_counts))
    if post.n_strategies > settings.max_parent_outcomes:
        raise error(
            f"{post.n_strategies} deterministic strategies exceed the limit of {settings.max_parent_outcomes}"
        )
    return post


def _trace_bounds(
    targets: Targets,
    noise: Optional[Targets],
    extra_responses: Sequence[Sequence[Sequence[float]]],
) -> Tuple[Optional[float], List[Optional[float]]]:
    """Caps on tr V over feasible points.

    The equalities of one measurement add up every block once, so its summed target
    trace bounds each block when no response table enters that sum negatively.
    """
    totals = {}
    for k, row in enumerate(targets):
        if any(min(p[k]) < 0 for p in extra_responses):
            continue
        total = sum(float(np.trace(t).real) for t in row)
        if noise is not None:
            total = max(total, sum(float(np.trace(n).real) for n in noise[k]))
        totals[k] = total
    extra: List[Optional[float]] = []
    for p in extra_responses:
        caps = [total / sum(p[k]) for k, total in totals.items() if sum(p[k]) > 0]
        extra.append(min(caps) if caps else None)
    return min(totals.values(), default=None), extra


def decomposition_problem(
    targets: Targets,
    noise: Optional[Targets] = None,
    name: str = "decomposition",
    error: Type[TooManyOutcomes] = TooManyOutcomes,
    extra_responses: Sequence[Sequence[Sequence[float]]] = (),
) -> Tuple[ConicProblem, PostProcessing]:
    """Feasibility problem, or with `noise` the maximize-lambda robustness problem.

    `extra_responses` adds one variable per stochastic response table p[k][x],
    entering the (k, x) equality with weight p[k][x].
    """
    post = check_size([len(row) for row in targets], error)
    dim = targets[0][0].shape[0]
    strategies = post.strategies
    bound, extra_bounds = _trace_bounds(targets, noise, extra_responses)
    blocks = tuple(Block(strategy_name(s), dim, trace_bound=bound) for s in strategies) + tuple(
        Block(f"r_{i}", dim, trace_bound=extra_bounds[i]) for i in range(len(extra_responses))
    )
    equalities = []
    for k, row in enumerate(targets):
        for x, target in enumerate(row):
            terms = tuple(Term(strategy_name(s)) for s in strategies if s[k] == x) + tuple(
                Term(f"r_{i}", coefficient=float(p[k][x]))
                for i, p in enumerate(extra_responses)
                if p[k][x] != 0
            )
            if noise is None:
                equalities.append(Equality(label=f"k{k}x{x}", target=np.asarray(target), terms=terms))
            else:
                n = np.asarray(noise[k][x])
                equalities.append(
                    Equality(
                        label=f"k{k}x{x}",
                        target=n,
                        terms=terms,
                        scalar_terms=(ScalarTerm(NOISE_SCALAR, -(np.asarray(target) - n)),),
                    )
                )
    if noise is None:
        return ConicProblem(blocks=blocks, equalities=tuple(equalities), name=name), post
    problem = ConicProblem(
        blocks=blocks,
        equalities=tuple(equalities),
        scalars=(Scalar(NOISE_SCALAR, lower=0.0, upper=1.0),),
        objective={NOISE_SCALAR: 1.0},
        name=name,
    )
    return problem, post


def ordered_blocks(certificate_blocks: dict, post: PostProcessing) -> List[np.ndarray]:
    return [certificate_blocks[strategy_name(s)] for s in post.strategies]


def bisect_threshold(feasible_at: Callable[[float], bool], width: float) -> Tuple[float, int]:
    """Largest lam in [0, 1] with feasible_at(lam), assuming feasibility is monotone and holds at 0.

    A numerical failure at some lam counts as infeasible there.
    """

    def check(lam: float) -> bool:
        try:
            return feasible_at(lam)
        except NumericalFailure as exc:
            logger.warning("bisection: lambda = {:.9f} counted as infeasible ({})", lam, exc)
            return False

    if check(1.0):
        return 1.0, 1
    lo, hi, steps = 0.0, 1.0, 1
    while hi - lo > width:
        mid = (lo + hi) / 2
        steps += 1
        if check(mid):
            lo = mid
        else:
            hi = mid
        logger.debug("bisection step {}: [{:.9f}, {:.9f}]", steps, lo, hi)
    return lo, steps
