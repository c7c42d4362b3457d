"""Load forecast errors.

The uncertainty is a zero-mean normal, independent per load bus, with a
standard deviation proportional to that bus's demand. Buses without load
never move.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .exceptions import NegativeSigmaFrac

DEFAULT_SIGMA_FRAC = 0.03


@dataclass(frozen=True)
class UncertaintyModel:
    sigma: np.ndarray
    sigma_frac: float
    load_buses: tuple

    @property
    def n_bus(self):
        return self.sigma.shape[0]

    @property
    def mean(self):
        return np.zeros(self.n_bus)


class OmegaSampler(Protocol):
    name: str

    def sample(self, model: UncertaintyModel, rng: np.random.Generator) -> np.ndarray:
        ...


class NormalSampler:
    name = 'normal'

    def sample(self, model, rng):
        omega = np.zeros(model.n_bus)
        loads = list(model.load_buses)
        if loads:
            omega[loads] = rng.normal(0.0, model.sigma[loads])
        return omega


def build_distribution(net, sigma_frac=DEFAULT_SIGMA_FRAC):
    if sigma_frac < 0:
        raise NegativeSigmaFrac(sigma_frac)
    sigma = np.zeros(net.n_bus)
    loads = list(net.load_buses)
    sigma[loads] = sigma_frac * net.demand[loads]
    sigma.setflags(write=False)
    return UncertaintyModel(sigma=sigma, sigma_frac=float(sigma_frac), load_buses=tuple(loads))


def sample_omega(model, rng, sampler=None):
    return (sampler or NormalSampler()).sample(model, rng)
