import logging

from .model import init_model
from .training import train

logger = logging.getLogger(__name__)


class ClassifierService:
    """Builds and trains a fresh classifier for a labeled dataset"""

    @classmethod
    def fit(cls, train_ds, cfg):
        model = init_model(cfg, input_dim=len(train_ds.meta.load_buses), k=len(train_ds.dictionary), seed=cfg.seed)
        logger.info(
            f"Training {len(cfg.layer_widths)}-layer classifier {list(cfg.layer_widths)} on "
            f"{len(train_ds)} samples, {model.k} classes"
        )
        return train(model, train_ds, cfg)


def fit_classifier(train_ds, cfg):
    return ClassifierService.fit(train_ds, cfg)
