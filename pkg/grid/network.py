"""Network data carried from a MATPOWER case into the DC-OPF.

``RawCase`` holds the tables exactly as read; ``Network`` holds the per-unit
quantities the DC-OPF consumes. Both are immutable.
"""
import math
from dataclasses import dataclass, field

import numpy as np

# Minimum column counts per MATPOWER table
TABLE_COLUMNS = {
    'bus': 13,
    'gen': 21,
    'branch': 13,
    'gencost': 4,
}

# MATPOWER column indices (0-based)
BUS_I, BUS_TYPE, PD = 0, 1, 2
REF_BUS_TYPE = 3
GEN_BUS, GEN_STATUS, PMAX, PMIN = 0, 7, 8, 9
F_BUS, T_BUS, BR_X, RATE_A, BR_STATUS = 0, 1, 3, 5, 10
COST_MODEL, NCOST, COST = 0, 3, 4
PW_LINEAR, POLYNOMIAL = 1, 2

UNLIMITED = math.inf


@dataclass(frozen=True)
class RawCase:
    case_name: str
    base_mva: float
    bus: tuple
    gen: tuple
    branch: tuple
    gencost: tuple

    @property
    def table_sizes(self):
        return (len(self.bus), len(self.gen), len(self.branch), len(self.gencost))

    def table(self, name):
        return getattr(self, name)


@dataclass(frozen=True)
class Bus:
    index: int
    external_id: int
    demand: float
    is_load: bool


@dataclass(frozen=True)
class Generator:
    bus: int
    p_min: float
    p_max: float
    cost: float


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    susceptance: float
    f_max: float

    @property
    def is_limited(self):
        return math.isfinite(self.f_max)


@dataclass(frozen=True)
class Network:
    case_name: str
    base_mva: float
    buses: tuple
    generators: tuple
    branches: tuple
    slack_bus: int
    _demand: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        demand = np.array([bus.demand for bus in self.buses], dtype=float)
        demand.setflags(write=False)
        object.__setattr__(self, '_demand', demand)

    @property
    def n_bus(self):
        return len(self.buses)

    @property
    def n_gen(self):
        return len(self.generators)

    @property
    def n_branch(self):
        return len(self.branches)

    @property
    def demand(self):
        """Nodal demand d in per-unit"""
        return self._demand

    @property
    def load_buses(self):
        return tuple(bus.index for bus in self.buses if bus.is_load)

    @property
    def generator_buses(self):
        """The generator-to-bus map H as an index list"""
        return tuple(gen.bus for gen in self.generators)

    def incidence_matrix(self):
        """H as a dense n_bus x n_gen 0/1 matrix"""
        H = np.zeros((self.n_bus, self.n_gen))
        for g, gen in enumerate(self.generators):
            H[gen.bus, g] = 1.0
        return H

    def external_bus_ids(self):
        return tuple(bus.external_id for bus in self.buses)
