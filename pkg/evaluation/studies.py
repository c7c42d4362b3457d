"""Sweeps that retrain a fresh classifier per cell and score it on one test set."""
import logging
from dataclasses import dataclass

from classifier.services import fit_classifier

from .metrics import topk_accuracy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StudyCell:
    parameter: int
    K: int
    accuracy: float
    n_train: int


def _cells(parameter, model, train_ds, test, K_list):
    accuracy = topk_accuracy(model, test, K_list)
    return [StudyCell(parameter, K, accuracy[K], len(train_ds)) for K in sorted(accuracy)]


def learning_curve(train_ds, test, sizes, cfg, K_list):
    """eta_K against the training-set size.

    Size n trains on the first n training samples, so a larger size always
    extends the data of a smaller one.
    """
    rows = []
    for size in sorted(set(int(s) for s in sizes)):
        if size > len(train_ds):
            logger.warning(f"Learning curve size {size} exceeds the {len(train_ds)} training samples")
        subset = train_ds.head(size)
        model = fit_classifier(subset, cfg).model
        rows.extend(_cells(len(subset), model, subset, test, K_list))
        logger.info(f"Learning curve: trained on {len(subset)} samples")
    return rows


def depth_study(train_ds, test, depths, cfg, K_list):
    """eta_K against the number of hidden layers (first ``d`` widths of cfg)"""
    rows = []
    for depth in sorted(set(int(d) for d in depths)):
        model = fit_classifier(train_ds, cfg.truncated(depth)).model
        rows.extend(_cells(depth, model, train_ds, test, K_list))
        logger.info(f"Depth study: depth {depth} done")
    return rows
