from dataclasses import dataclass

import numpy as np

from core.exceptions import DimensionMismatch

from .exceptions import BindingMismatch, KOutOfRange
from .training import eval_probs


@dataclass(frozen=True)
class RankedPrediction:
    classes: tuple
    scores: tuple

    def __len__(self):
        return len(self.classes)


def ensure_binding(model, dictionary):
    digest = dictionary.digest()
    if model.label_binding != digest:
        raise BindingMismatch(model.label_binding, digest)


def predict_proba(model, omegas):
    """Class probabilities for full nodal omega vectors (one per row)"""
    omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
    if model.n_bus and omegas.shape[1] != model.n_bus:
        raise DimensionMismatch('omega', model.n_bus, omegas.shape[1])
    features = omegas[:, list(model.feature_buses)] if model.feature_buses else omegas
    return eval_probs(model, model.scaler.transform(features))


def rank_classes(probs, K):
    """Top-K class indices per row; equal scores go to the lower class index"""
    probs = np.atleast_2d(probs)
    order = np.argsort(-probs, axis=1, kind='stable')
    return order[:, :K]


def _check_k(model, K):
    if not 1 <= K <= model.k:
        raise KOutOfRange(K, model.k)


def predict_topk(model, omega, K):
    _check_k(model, K)
    probs = predict_proba(model, omega)[0]
    classes = rank_classes(probs, K)[0]
    return RankedPrediction(
        classes=tuple(int(c) for c in classes),
        scores=tuple(float(probs[c]) for c in classes),
    )


def predict_topk_batch(model, omegas, K):
    """(N, K) class matrix; row i is predict_topk(model, omegas[i], K).classes"""
    _check_k(model, K)
    return rank_classes(predict_proba(model, omegas), K)
