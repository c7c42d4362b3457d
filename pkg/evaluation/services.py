import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from classifier.prediction import ensure_binding, predict_proba, rank_classes
from dcopf.services import TOL_FEASIBLE
from scenarios.exceptions import EmptySplit
from scenarios.services import unseen_rate

from .metrics import optimality_gap, topk_hits
from .policies import ensemble_policy, policy_from_ranking

logger = logging.getLogger(__name__)

ENSEMBLE = 'ensemble'


@dataclass(frozen=True)
class PolicySummary:
    name: str
    K: Optional[int]
    n_samples: int
    feasibility_rate: float
    mean_gap: float
    max_gap: float
    mean_candidates: float
    max_candidates: int
    mean_latency_s: float
    fallback_count: int
    outcomes: dict

    def to_dict(self):
        return {
            'name': self.name,
            'K': self.K,
            'n_samples': self.n_samples,
            'feasibility_rate': self.feasibility_rate,
            'mean_gap': self.mean_gap,
            'max_gap': self.max_gap,
            'mean_candidates': self.mean_candidates,
            'max_candidates': self.max_candidates,
            'mean_latency_s': self.mean_latency_s,
            'fallback_count': self.fallback_count,
            'outcomes': dict(sorted(self.outcomes.items())),
        }


@dataclass
class EvalReport:
    n_test: int
    unseen_fraction: float
    accuracy: dict
    policies: list
    confusion: Counter = field(default_factory=Counter)
    # Per-sample results keyed by K, and by ENSEMBLE for the full dictionary
    results: dict = field(default_factory=dict, repr=False)

    def policy(self, name):
        return next(p for p in self.policies if p.name == name)

    def to_dict(self):
        return {
            'n_test': self.n_test,
            'unseen_fraction': self.unseen_fraction,
            'accuracy': {str(K): eta for K, eta in sorted(self.accuracy.items())},
            'policies': [p.to_dict() for p in self.policies],
            'confusion_top1': [
                [int(true), int(predicted), count]
                for (true, predicted), count in sorted(self.confusion.items())
            ],
        }


def _summarize(name, K, results, latencies, true_costs):
    gaps = optimality_gap(results, true_costs)
    candidates = [r.candidates_evaluated for r in results]
    return PolicySummary(
        name=name,
        K=K,
        n_samples=len(results),
        feasibility_rate=1.0 - gaps.infeasible_fraction,
        mean_gap=gaps.mean_gap,
        max_gap=gaps.max_gap,
        mean_candidates=float(np.mean(candidates)),
        max_candidates=int(np.max(candidates)),
        mean_latency_s=float(np.mean(latencies)),
        fallback_count=sum(1 for r in results if r.fallback_used),
        outcomes=dict(Counter(r.outcome.value for r in results)),
    )


class EvaluationService:
    """Runs the classifier policies and the full ensemble over a test set"""

    @classmethod
    def evaluate_policies(cls, model, dictionary, poly, test, K_list, fallback_lp=False, tol=TOL_FEASIBLE):
        if len(test) == 0:
            raise EmptySplit(0)
        ensure_binding(model, dictionary)

        K_list = sorted(set(int(K) for K in K_list))
        effective = {K: min(K, model.k) for K in K_list}
        depth = max(effective.values())
        candidates = list(dictionary)

        results = {K: [] for K in K_list}
        latencies = {K: [] for K in K_list}
        results[ENSEMBLE], latencies[ENSEMBLE] = [], []
        ranked_rows = []

        for sample in test.samples:
            start = time.perf_counter()
            ranked = rank_classes(predict_proba(model, sample.omega)[0], depth)[0]
            predict_time = time.perf_counter() - start
            ranked_rows.append(ranked)

            for K in K_list:
                start = time.perf_counter()
                result = policy_from_ranking(
                    dictionary, poly, sample.omega, ranked[:effective[K]], sample.cost, fallback_lp, tol,
                )
                latencies[K].append(predict_time + time.perf_counter() - start)
                results[K].append(result)

            start = time.perf_counter()
            results[ENSEMBLE].append(ensemble_policy(poly, candidates, sample.omega, sample.cost, tol))
            latencies[ENSEMBLE].append(time.perf_counter() - start)

        ranked = np.vstack(ranked_rows)
        labels = test.labels
        accuracy = topk_hits(ranked, labels, K_list)
        confusion = Counter(zip(labels.tolist(), ranked[:, 0].tolist()))

        true_costs = test.costs
        policies = [
            _summarize(f'classifier_top{K}', K, results[K], latencies[K], true_costs)
            for K in K_list
        ]
        policies.append(_summarize(ENSEMBLE, None, results[ENSEMBLE], latencies[ENSEMBLE], true_costs))

        report = EvalReport(
            n_test=len(test),
            unseen_fraction=unseen_rate(test),
            accuracy=accuracy,
            policies=policies,
            confusion=confusion,
            results=results,
        )
        logger.info(
            f"Evaluated {len(test)} samples: "
            + ', '.join(f"eta_{K}={accuracy[K]:.4f}" for K in K_list)
        )
        return report


def evaluate_policies(model, dictionary, poly, test, K_list, fallback_lp=False, tol=TOL_FEASIBLE):
    return EvaluationService.evaluate_policies(model, dictionary, poly, test, K_list, fallback_lp, tol)
