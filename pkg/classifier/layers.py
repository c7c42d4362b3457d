"""Forward and backward passes of the building blocks of the classifier.

Every ``*_forward`` returns ``(out, cache)`` and the matching ``*_backward``
takes the upstream gradient and that cache. Arrays are (batch, features).
"""
import numpy as np

from .exceptions import LabelOutOfRange

LOG_FLOOR = 1e-12


def affine_forward(x, W, B):
    return x @ W + B, (x, W)


def affine_backward(dout, cache):
    x, W = cache
    return dout @ W.T, x.T @ dout, np.sum(dout, axis=0)


def relu_forward(x):
    return np.maximum(x, 0.0), x


def relu_backward(dout, cache):
    return dout * (cache > 0)


def batchnorm_train_forward(x, gamma, beta, eps):
    """Normalize with the batch statistics; returns them for the running update"""
    mean = np.mean(x, axis=0)
    var = np.var(x, axis=0)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean) * inv_std
    return gamma * x_hat + beta, (x_hat, inv_std, gamma), mean, var


def batchnorm_eval_forward(x, gamma, beta, running_mean, running_var, eps):
    x_hat = (x - running_mean) / np.sqrt(running_var + eps)
    return gamma * x_hat + beta


def batchnorm_backward(dout, cache):
    """Gradient through the batch statistics as well as the affine rescale"""
    x_hat, inv_std, gamma = cache
    n = dout.shape[0]
    dbeta = np.sum(dout, axis=0)
    dgamma = np.sum(dout * x_hat, axis=0)
    dx_hat = dout * gamma
    dx = (inv_std / n) * (
        n * dx_hat - np.sum(dx_hat, axis=0) - x_hat * np.sum(dx_hat * x_hat, axis=0)
    )
    return dx, dgamma, dbeta


def dropout_forward(x, rate, rng):
    """Inverted dropout: kept units are scaled by 1/(1 - rate)"""
    if rate <= 0.0:
        mask = np.ones_like(x)
    else:
        mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(dout, mask):
    return dout * mask


def softmax(logits):
    shifted = logits - np.max(logits, axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=1, keepdims=True)


def _label_indices(labels, k):
    labels = np.asarray(labels)
    if labels.ndim == 2:
        labels = np.argmax(labels, axis=1)
    labels = labels.astype(int)
    bad = labels[(labels < 0) | (labels >= k)]
    if bad.size:
        raise LabelOutOfRange(int(bad[0]), k)
    return labels


def cross_entropy(probs, labels):
    """Mean negative log-probability of the true class.

    ``labels`` may be class indices or one-hot rows.
    """
    probs = np.asarray(probs, dtype=float)
    n, k = probs.shape
    labels = _label_indices(labels, k)
    picked = probs[np.arange(n), labels]
    return float(-np.mean(np.log(np.maximum(picked, LOG_FLOOR))))


def softmax_cross_entropy_backward(probs, labels):
    """d loss / d logits = (probs - onehot) / N"""
    n, k = probs.shape
    labels = _label_indices(labels, k)
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    return dlogits / n
