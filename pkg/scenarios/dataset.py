from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class LabeledSample:
    index: int
    omega: np.ndarray
    label: int
    p_star: np.ndarray
    cost: float
    feasible: bool = True


@dataclass(frozen=True)
class DatasetMeta:
    case_name: str
    sigma_frac: float
    seed: int
    generator_version: str
    bus_ids: tuple
    load_buses: tuple
    n_gen: int
    n_requested: int = 0
    n_infeasible: int = 0
    sampler: str = 'normal'
    fingerprint: str = ''
    extra: dict = field(default_factory=dict)

    @property
    def n_bus(self):
        return len(self.bus_ids)

    def to_dict(self):
        return {
            'case_name': self.case_name,
            'sigma_frac': self.sigma_frac,
            'seed': self.seed,
            'generator_version': self.generator_version,
            'bus_ids': list(self.bus_ids),
            'load_buses': list(self.load_buses),
            'n_gen': self.n_gen,
            'n_requested': self.n_requested,
            'n_infeasible': self.n_infeasible,
            'sampler': self.sampler,
            'fingerprint': self.fingerprint,
            'extra': dict(self.extra),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            case_name=data['case_name'],
            sigma_frac=float(data['sigma_frac']),
            seed=int(data['seed']),
            generator_version=data.get('generator_version', ''),
            bus_ids=tuple(data['bus_ids']),
            load_buses=tuple(data['load_buses']),
            n_gen=int(data['n_gen']),
            n_requested=int(data.get('n_requested', 0)),
            n_infeasible=int(data.get('n_infeasible', 0)),
            sampler=data.get('sampler', 'normal'),
            fingerprint=data.get('fingerprint', ''),
            extra=dict(data.get('extra', {})),
        )


@dataclass
class Dataset:
    samples: list
    dictionary: object
    meta: DatasetMeta

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def omegas(self):
        """(N, n_bus) matrix of forecast errors"""
        if not self.samples:
            return np.zeros((0, self.meta.n_bus))
        return np.vstack([s.omega for s in self.samples])

    @property
    def labels(self):
        return np.array([s.label for s in self.samples], dtype=int)

    @property
    def p_stars(self):
        if not self.samples:
            return np.zeros((0, self.meta.n_gen))
        return np.vstack([s.p_star for s in self.samples])

    @property
    def costs(self):
        return np.array([s.cost for s in self.samples], dtype=float)

    def subset(self, positions):
        return Dataset(
            samples=[self.samples[i] for i in positions],
            dictionary=self.dictionary,
            meta=self.meta,
        )

    def head(self, n):
        return self.subset(range(min(n, len(self.samples))))

    def with_meta(self, **changes):
        return Dataset(samples=self.samples, dictionary=self.dictionary, meta=replace(self.meta, **changes))
