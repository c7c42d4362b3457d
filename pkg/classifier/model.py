"""The fully connected ReLU classifier.

Each hidden layer runs affine -> batch-norm -> ReLU -> dropout; the output
layer is affine followed by softmax over the k active-set classes.
"""
import enum
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import DimensionMismatch
from core.rng import substream

from .exceptions import NonfiniteActivation, StaleCache
from .layers import (
    affine_backward, affine_forward, batchnorm_backward, batchnorm_eval_forward,
    batchnorm_train_forward, dropout_backward, dropout_forward, relu_backward, relu_forward,
    softmax, softmax_cross_entropy_backward,
)

STD_FLOOR = 1e-8


class Mode(enum.Enum):
    TRAIN = 'train'
    EVAL = 'eval'


@dataclass
class HiddenLayer:
    W: np.ndarray
    B: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.99
    epsilon: float = 1e-3
    dropout_rate: float = 0.0

    @property
    def width(self):
        return self.W.shape[1]


@dataclass
class OutputLayer:
    W: np.ndarray
    B: np.ndarray


@dataclass
class FeatureScaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def identity(cls, dim):
        return cls(mean=np.zeros(dim), std=np.ones(dim))

    @classmethod
    def fit(cls, X):
        return cls(mean=np.mean(X, axis=0), std=np.maximum(np.std(X, axis=0), STD_FLOOR))

    def transform(self, X):
        return (X - self.mean) / self.std


@dataclass
class MlpModel:
    hidden: list
    output: OutputLayer
    input_dim: int
    k: int
    scaler: FeatureScaler
    label_binding: str = ''
    # Positions of the feature entries inside a full nodal omega vector
    feature_buses: tuple = ()
    n_bus: int = 0
    train_config: dict = field(default_factory=dict)
    run_config: dict = field(default_factory=dict)
    # Bumped on every parameter update; caches remember the value they saw
    version: int = field(default=0, compare=False)

    def parameters(self):
        """Trainable arrays by name; the arrays are the model's own"""
        params = {}
        for j, layer in enumerate(self.hidden):
            params[f'hidden.{j}.W'] = layer.W
            params[f'hidden.{j}.B'] = layer.B
            params[f'hidden.{j}.gamma'] = layer.gamma
            params[f'hidden.{j}.beta'] = layer.beta
        params['output.W'] = self.output.W
        params['output.B'] = self.output.B
        return params

    @property
    def widths(self):
        return [layer.width for layer in self.hidden]


@dataclass
class ForwardCache:
    mode: Mode
    version: int
    layers: list
    output: tuple
    probs: np.ndarray


def init_model(cfg, input_dim, k, seed):
    """He-normal weights, zero biases, identity batch-norm, running stats (0, 1)"""
    if input_dim < 1 or k < 1:
        raise DimensionMismatch('model', 'positive input_dim and k', (input_dim, k))
    rng = substream(seed, 'init')
    hidden = []
    fan_in = input_dim
    for width in cfg.layer_widths:
        hidden.append(HiddenLayer(
            W=rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, width)),
            B=np.zeros(width),
            gamma=np.ones(width),
            beta=np.zeros(width),
            running_mean=np.zeros(width),
            running_var=np.ones(width),
            momentum=cfg.bn_momentum,
            epsilon=cfg.bn_epsilon,
            dropout_rate=cfg.dropout_rate,
        ))
        fan_in = width
    output = OutputLayer(W=rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, k)), B=np.zeros(k))
    return MlpModel(
        hidden=hidden,
        output=output,
        input_dim=input_dim,
        k=k,
        scaler=FeatureScaler.identity(input_dim),
        train_config=cfg.to_dict(),
    )


def forward(model, X, mode=Mode.EVAL, rng=None):
    """Class probabilities for standardized features X.

    Train mode normalizes with batch statistics, updates the running
    statistics and applies dropout drawn from ``rng``. Eval mode touches
    nothing and is a pure function of the model and X.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.input_dim:
        raise DimensionMismatch('features', model.input_dim, X.shape[1])

    training = mode is Mode.TRAIN
    h = X
    layer_caches = []
    for j, layer in enumerate(model.hidden):
        a, affine_cache = affine_forward(h, layer.W, layer.B)
        if training:
            y, bn_cache, mean, var = batchnorm_train_forward(a, layer.gamma, layer.beta, layer.epsilon)
            layer.running_mean *= layer.momentum
            layer.running_mean += (1.0 - layer.momentum) * mean
            layer.running_var *= layer.momentum
            layer.running_var += (1.0 - layer.momentum) * var
        else:
            y = batchnorm_eval_forward(
                a, layer.gamma, layer.beta, layer.running_mean, layer.running_var, layer.epsilon,
            )
            bn_cache = None
        h, relu_cache = relu_forward(y)
        mask = None
        if training and layer.dropout_rate > 0:
            if rng is None:
                raise ValueError("Training forward with dropout needs a random generator")
            h, mask = dropout_forward(h, layer.dropout_rate, rng)
        if not np.all(np.isfinite(h)):
            raise NonfiniteActivation(f"hidden layer {j}")
        layer_caches.append((affine_cache, bn_cache, relu_cache, mask))

    logits, output_cache = affine_forward(h, model.output.W, model.output.B)
    if not np.all(np.isfinite(logits)):
        raise NonfiniteActivation('output layer')
    probs = softmax(logits)
    return probs, ForwardCache(mode, model.version, layer_caches, output_cache, probs)


def backward(model, cache, labels):
    """Gradients of the mean cross-entropy for every trainable parameter"""
    if cache.mode is not Mode.TRAIN:
        raise StaleCache("Backward pass needs the cache of a training forward pass")
    if cache.version != model.version:
        raise StaleCache(
            f"Cache was built at parameter version {cache.version}, model is at {model.version}"
        )

    grads = {}
    dlogits = softmax_cross_entropy_backward(cache.probs, labels)
    dh, grads['output.W'], grads['output.B'] = affine_backward(dlogits, cache.output)

    for j in reversed(range(len(model.hidden))):
        affine_cache, bn_cache, relu_cache, mask = cache.layers[j]
        if mask is not None:
            dh = dropout_backward(dh, mask)
        dy = relu_backward(dh, relu_cache)
        da, grads[f'hidden.{j}.gamma'], grads[f'hidden.{j}.beta'] = batchnorm_backward(dy, bn_cache)
        dh, grads[f'hidden.{j}.W'], grads[f'hidden.{j}.B'] = affine_backward(da, affine_cache)

    return grads
