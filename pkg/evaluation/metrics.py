import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np

from classifier.prediction import predict_topk_batch
from scenarios.dictionary import UNSEEN_LABEL

logger = logging.getLogger(__name__)

FREE, AT_UPPER, AT_LOWER = 'free', 'upper', 'lower'


def topk_hits(ranked, labels, K_list):
    """Fraction of rows whose label is among the first K ranked classes"""
    labels = np.asarray(labels)
    accuracy = {}
    for K in K_list:
        if labels.size == 0:
            accuracy[K] = float('nan')
            continue
        top = ranked[:, :K]
        accuracy[K] = float(np.mean(np.any(top == labels[:, None], axis=1)))
    return accuracy


def topk_accuracy(model, test, K_list):
    """eta_K for every K; K beyond the class count behaves like K = k.

    Labels outside the training dictionary (UNSEEN_LABEL) count as misses.
    """
    K_list = sorted(set(int(K) for K in K_list))
    depth = min(max(K_list), model.k)
    ranked = predict_topk_batch(model, test.omegas, depth) if len(test) else np.zeros((0, depth), int)
    return topk_hits(ranked, test.labels, K_list)


@dataclass(frozen=True)
class RowStatus:
    row: int
    label: str
    active_count: int
    fixed: bool


@dataclass(frozen=True)
class ElementStatus:
    kind: str
    element: int
    counts: dict
    fixed: bool


@dataclass(frozen=True)
class FixedStatusReport:
    n_samples: int
    rows: list
    elements: list
    generator_fixed_pct: float
    flow_fixed_pct: float
    generator_element_fixed_pct: float
    flow_element_fixed_pct: float


def _pct(flags):
    return 100.0 * float(np.mean(flags)) if len(flags) else 100.0


def active_matrix(ds, n_rows):
    """(N, n_rows) booleans: row r is binding in sample i; unseen labels are skipped"""
    labels = [s.label for s in ds.samples if s.label != UNSEEN_LABEL]
    matrix = np.zeros((len(labels), n_rows), dtype=bool)
    for i, label in enumerate(labels):
        matrix[i, list(ds.dictionary[label].rows)] = True
    return matrix


def fixed_status_report(ds, poly):
    """Which constraints keep one status across every sample.

    Per row the status is binding or not. Per element (a generator or a rated
    branch) it is free, at its upper limit or at its lower limit, read from
    the two rows the element owns.
    """
    active = active_matrix(ds, poly.n_rows)
    n = active.shape[0]
    counts = active.sum(axis=0)
    row_fixed = (counts == 0) | (counts == n)

    rows = [
        RowStatus(row=r, label=str(label), active_count=int(counts[r]), fixed=bool(row_fixed[r]))
        for r, label in enumerate(poly.row_labels)
    ]

    elements = []
    pairs = [('generator', g, g, poly.n_gen + g) for g in range(poly.n_gen)]
    base = 2 * poly.n_gen
    pairs += [
        ('branch', k, base + i, base + poly.n_rated + i)
        for i, k in enumerate(poly.rated_branches)
    ]
    for kind, element, upper, lower in pairs:
        status = np.where(active[:, upper], AT_UPPER, np.where(active[:, lower], AT_LOWER, FREE))
        tally = Counter(status.tolist())
        elements.append(ElementStatus(
            kind=kind,
            element=element,
            counts={key: tally.get(key, 0) for key in (FREE, AT_UPPER, AT_LOWER)},
            fixed=len(tally) <= 1,
        ))

    generator_rows = [row_fixed[r] for r, label in enumerate(poly.row_labels) if label.kind.is_generator]
    flow_rows = [row_fixed[r] for r, label in enumerate(poly.row_labels) if not label.kind.is_generator]
    return FixedStatusReport(
        n_samples=n,
        rows=rows,
        elements=elements,
        generator_fixed_pct=_pct(generator_rows),
        flow_fixed_pct=_pct(flow_rows),
        generator_element_fixed_pct=_pct([e.fixed for e in elements if e.kind == 'generator']),
        flow_element_fixed_pct=_pct([e.fixed for e in elements if e.kind == 'branch']),
    )


@dataclass(frozen=True)
class FrequencyRow:
    label: int
    count: int
    frequency: float
    rows: tuple


def frequency_distribution(ds):
    """Active sets by observed count, most frequent first (ties by label)"""
    labels = [s.label for s in ds.samples if s.label != UNSEEN_LABEL]
    tally = Counter(labels)
    total = len(labels)
    ordered = sorted(tally.items(), key=lambda item: (-item[1], item[0]))
    return [
        FrequencyRow(label=label, count=count, frequency=count / total, rows=ds.dictionary[label].rows)
        for label, count in ordered
    ]


@dataclass(frozen=True)
class GapSummary:
    mean_gap: float
    max_gap: float
    infeasible_fraction: float
    n_feasible: int
    gaps: np.ndarray


def optimality_gap(results, true_costs):
    """Relative cost excess of policy results over the LP optimum.

    Samples without a feasible policy result are only counted in
    ``infeasible_fraction``. A zero optimum is compared in absolute terms.
    """
    true_costs = np.asarray(true_costs, dtype=float)
    gaps = []
    infeasible = 0
    for result, optimum in zip(results, true_costs):
        if not result.feasible:
            infeasible += 1
            continue
        scale = abs(optimum) if optimum != 0 else 1.0
        gaps.append((result.cost - optimum) / scale)
    gaps = np.asarray(gaps, dtype=float)
    n = len(true_costs)
    return GapSummary(
        mean_gap=float(np.mean(gaps)) if gaps.size else float('nan'),
        max_gap=float(np.max(gaps)) if gaps.size else float('nan'),
        infeasible_fraction=infeasible / n if n else 0.0,
        n_feasible=int(gaps.size),
        gaps=gaps,
    )
