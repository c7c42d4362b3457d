import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from core.exceptions import ConfigError, DimensionMismatch
from core.rng import substream

from .exceptions import EmptyDataset, LabelOutOfRange, SingleClassDataset
from .layers import cross_entropy
from .model import FeatureScaler, Mode, backward, forward
from .optim import AdamHyper, AdamState, adam_step

logger = logging.getLogger(__name__)

DEFAULT_LAYER_WIDTHS = (256, 256, 128, 128, 64)
EVAL_BATCH = 4096


@dataclass(frozen=True)
class TrainConfig:
    layer_widths: tuple = DEFAULT_LAYER_WIDTHS
    epochs: int = 20
    batch_size: int = 32
    adam: AdamHyper = field(default_factory=AdamHyper)
    dropout_rate: float = 0.2
    bn_momentum: float = 0.99
    bn_epsilon: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'layer_widths', tuple(int(w) for w in self.layer_widths))
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be at least 1, got {self.batch_size}")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if any(w < 1 for w in self.layer_widths):
            raise ConfigError(f"Layer widths must be positive: {self.layer_widths}")

    def truncated(self, depth):
        """Same settings with only the first ``depth`` hidden layers"""
        if not 1 <= depth <= len(self.layer_widths):
            raise ConfigError(f"Depth {depth} is outside 1..{len(self.layer_widths)}")
        return replace(self, layer_widths=self.layer_widths[:depth])

    def to_dict(self):
        return {
            'layer_widths': list(self.layer_widths),
            'epochs': self.epochs,
            'batch_size': self.batch_size,
            'adam': self.adam.to_dict(),
            'dropout_rate': self.dropout_rate,
            'bn_momentum': self.bn_momentum,
            'bn_epsilon': self.bn_epsilon,
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if 'adam' in data:
            data['adam'] = AdamHyper(**data['adam'])
        if 'layer_widths' in data:
            data['layer_widths'] = tuple(data['layer_widths'])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown training settings: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_loss: float
    train_top1: float


@dataclass
class TrainResult:
    model: object
    history: list


def dataset_features(ds, feature_buses=None):
    """The load-bus entries of every omega in the dataset"""
    buses = list(ds.meta.load_buses if feature_buses is None else feature_buses)
    return ds.omegas[:, buses]


def eval_probs(model, X):
    """Eval-mode probabilities for standardized features, in fixed-size batches"""
    if X.shape[0] == 0:
        return np.zeros((0, model.k))
    return np.vstack([
        forward(model, X[start:start + EVAL_BATCH], Mode.EVAL)[0]
        for start in range(0, X.shape[0], EVAL_BATCH)
    ])


def train(model, train_ds, cfg):
    """Mini-batch Adam on the mean cross-entropy; mutates and returns ``model``"""
    n = len(train_ds)
    if n == 0:
        raise EmptyDataset()
    labels = train_ds.labels
    out_of_range = labels[(labels < 0) | (labels >= model.k)]
    if out_of_range.size:
        raise LabelOutOfRange(int(out_of_range[0]), model.k)
    if len(train_ds.meta.load_buses) != model.input_dim:
        raise DimensionMismatch('features', model.input_dim, len(train_ds.meta.load_buses))
    if np.unique(labels).size == 1:
        warnings.warn(
            f"All {n} training samples share class {labels[0]}; the model will predict it everywhere",
            SingleClassDataset,
            stacklevel=2,
        )
        logger.warning(f"Training on a single-class dataset ({train_ds.meta.case_name})")

    raw = dataset_features(train_ds)
    model.scaler = FeatureScaler.fit(raw)
    model.feature_buses = tuple(train_ds.meta.load_buses)
    model.n_bus = train_ds.meta.n_bus
    model.label_binding = train_ds.dictionary.digest()
    model.train_config = cfg.to_dict()
    X = model.scaler.transform(raw)

    state = AdamState.zeros_like(model.parameters())
    history = []
    for epoch in range(cfg.epochs):
        order = substream(cfg.seed, 'shuffle', epoch).permutation(n)
        total_loss = 0.0
        for batch, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            probs, cache = forward(model, X[idx], Mode.TRAIN, rng=substream(cfg.seed, 'dropout', epoch, batch))
            total_loss += cross_entropy(probs, labels[idx]) * len(idx)
            grads = backward(model, cache, labels[idx])
            adam_step(model, grads, state, cfg.adam)

        top1 = float(np.mean(np.argmax(eval_probs(model, X), axis=1) == labels))
        record = EpochRecord(epoch=epoch + 1, mean_loss=total_loss / n, train_top1=top1)
        history.append(record)
        logger.info(f"Epoch {record.epoch}/{cfg.epochs}: loss {record.mean_loss:.6f}, train top-1 {top1:.4f}")

    return TrainResult(model=model, history=history)
