"""Decision policies that replace the LP solve by a handful of linear solves.

The ensemble policy recovers the vertex of every candidate active set, keeps
the feasible ones and returns the cheapest. The classifier policy runs the
ensemble over the K active sets the classifier ranks highest.
"""
import enum
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from classifier.prediction import ensure_binding, predict_topk
from dcopf.exceptions import SingularBasis
from dcopf.services import TOL_FEASIBLE, check_feasible, recover_solution, solve_dcopf

logger = logging.getLogger(__name__)

# Relative slack when comparing a policy cost with the LP optimum
COST_RTOL = 1e-9


class Outcome(enum.Enum):
    OPTIMAL = 'Optimal'
    FEASIBLE_SUBOPTIMAL = 'FeasibleSuboptimal'
    NO_FEASIBLE_CANDIDATE = 'NoFeasibleCandidate'


@dataclass(frozen=True)
class PolicyResult:
    p_hat: Optional[np.ndarray]
    cost: float
    chosen_set: Optional[int]
    feasible: bool
    candidates_evaluated: int
    outcome: Outcome
    fallback_used: bool = False


def _reference_cost(poly, omega):
    """LP optimum at omega, or None when the LP has no optimal point"""
    point = solve_dcopf(poly, omega)
    return point.cost if point.is_optimal else None


def _is_suboptimal(cost, reference_cost):
    if reference_cost is None:
        return False
    return cost > reference_cost + COST_RTOL * max(abs(reference_cost), 1.0)


def ensemble_policy(poly, candidates, omega, reference_cost=None, tol=TOL_FEASIBLE):
    """Cheapest feasible vertex among the candidate active sets.

    ``chosen_set`` is the position of the winning candidate in ``candidates``;
    ties keep the earlier candidate. The winner is Optimal when its cost
    matches ``reference_cost`` and FeasibleSuboptimal above it. Without a
    reference the LP is solved at omega to supply one.
    """
    omega = poly.check_omega(omega)
    best_p, best_cost, best_index = None, np.inf, None
    evaluated = 0
    for index, aset in enumerate(candidates):
        evaluated += 1
        try:
            p = recover_solution(aset, poly, omega)
        except SingularBasis:
            continue
        if not check_feasible(p, poly, omega, tol).feasible:
            continue
        cost = float(poly.cost @ p)
        if cost < best_cost:
            best_p, best_cost, best_index = p, cost, index

    if best_index is None:
        return PolicyResult(None, np.nan, None, False, evaluated, Outcome.NO_FEASIBLE_CANDIDATE)
    if reference_cost is None:
        reference_cost = _reference_cost(poly, omega)
    outcome = Outcome.FEASIBLE_SUBOPTIMAL if _is_suboptimal(best_cost, reference_cost) else Outcome.OPTIMAL
    return PolicyResult(best_p, best_cost, best_index, True, evaluated, outcome)


def policy_from_ranking(dictionary, poly, omega, classes, reference_cost=None, fallback_lp=False, tol=TOL_FEASIBLE):
    """Ensemble over already-ranked classes, mapping the winner back to its class"""
    candidates = [dictionary[int(c)] for c in classes]
    result = ensemble_policy(poly, candidates, omega, reference_cost, tol)
    if result.feasible:
        return PolicyResult(
            result.p_hat, result.cost, int(classes[result.chosen_set]), True,
            result.candidates_evaluated, result.outcome,
        )
    if not fallback_lp:
        return result

    point = solve_dcopf(poly, omega)
    if not point.is_optimal:
        logger.warning("Fallback LP found no feasible dispatch either")
        return PolicyResult(None, np.nan, None, False, result.candidates_evaluated,
                            Outcome.NO_FEASIBLE_CANDIDATE, fallback_used=True)
    label = dictionary.label_of(point.active_set)
    return PolicyResult(
        point.p_star, point.cost, label if label >= 0 else None, True,
        result.candidates_evaluated, Outcome.OPTIMAL, fallback_used=True,
    )


def classifier_policy(model, dictionary, poly, omega, K, fallback_lp=False, reference_cost=None, tol=TOL_FEASIBLE):
    ensure_binding(model, dictionary)
    ranked = predict_topk(model, omega, K)
    return policy_from_ranking(dictionary, poly, omega, ranked.classes, reference_cost, fallback_lp, tol)
