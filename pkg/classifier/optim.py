"""Adam with bias correction, applied in place to a model's parameters."""
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import ConfigError, DimensionMismatch


@dataclass(frozen=True)
class AdamHyper:
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError(f"Adam betas must lie in (0, 1), got {self.beta1}, {self.beta2}")

    def to_dict(self):
        return {'alpha': self.alpha, 'beta1': self.beta1, 'beta2': self.beta2, 'epsilon': self.epsilon}


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls(
            m={name: np.zeros_like(p) for name, p in params.items()},
            v={name: np.zeros_like(p) for name, p in params.items()},
        )


def adam_update(params, grads, state, hyper):
    """One Adam step over a name -> array mapping, modifying the arrays in place"""
    state.t += 1
    correction1 = 1.0 - hyper.beta1 ** state.t
    correction2 = 1.0 - hyper.beta2 ** state.t
    for name, param in params.items():
        grad = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(param)
            state.v[name] = np.zeros_like(param)
        m, v = state.m[name], state.v[name]
        if m.shape != grad.shape or param.shape != grad.shape:
            raise DimensionMismatch(f"adam state for {name}", param.shape, grad.shape)
        m *= hyper.beta1
        m += (1.0 - hyper.beta1) * grad
        v *= hyper.beta2
        v += (1.0 - hyper.beta2) * grad * grad
        param -= hyper.alpha * (m / correction1) / (np.sqrt(v / correction2) + hyper.epsilon)
    return state


def adam_step(model, grads, state, hyper):
    adam_update(model.parameters(), grads, state, hyper)
    model.version += 1
    return model, state
