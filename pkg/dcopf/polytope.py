"""Matrix form of the DC-OPF feasible set.

    P(w) = { p : A p <= b + C w,  e'p = e'(d - mu - w) }

Rows come in four blocks, always in this order:

    GenUpper(g)   for every generator        A = I      C = 0
    GenLower(g)   for every generator        A = -I     C = 0
    FlowUpper(l)  for every rated branch     A = MH     C = -M
    FlowLower(l)  for every rated branch     A = -MH    C = M

Branches without a rating (RATE_A = 0) contribute no rows at all.
"""
import enum
import hashlib
from dataclasses import dataclass

import numpy as np

from core.exceptions import DimensionMismatch

from .ptdf import compute_ptdf


class RowKind(enum.Enum):
    GEN_UPPER = 'GenUpper'
    GEN_LOWER = 'GenLower'
    FLOW_UPPER = 'FlowUpper'
    FLOW_LOWER = 'FlowLower'

    @property
    def is_generator(self):
        return self in (RowKind.GEN_UPPER, RowKind.GEN_LOWER)


@dataclass(frozen=True)
class RowLabel:
    kind: RowKind
    element: int

    def __str__(self):
        return f"{self.kind.value}({self.element})"


@dataclass(frozen=True)
class Polytope:
    A: np.ndarray
    b: np.ndarray
    C: np.ndarray
    balance_rhs_base: float
    cost: np.ndarray
    row_labels: tuple
    p_min: np.ndarray
    p_max: np.ndarray
    rated_branches: tuple
    unrated_branches: tuple

    @property
    def n_rows(self):
        return self.A.shape[0]

    @property
    def n_gen(self):
        return self.A.shape[1]

    @property
    def n_bus(self):
        return self.C.shape[1]

    @property
    def n_rated(self):
        return len(self.rated_branches)

    def rhs(self, omega):
        """b + C w"""
        return self.b + self.C @ omega

    def balance_rhs(self, omega):
        """e'(d - mu - w)"""
        return self.balance_rhs_base - float(np.sum(omega))

    def check_omega(self, omega):
        omega = np.asarray(omega, dtype=float)
        if omega.shape != (self.n_bus,):
            raise DimensionMismatch('omega', self.n_bus, omega.shape)
        return omega

    def rows_of_kind(self, kind):
        return [i for i, label in enumerate(self.row_labels) if label.kind is kind]

    def fingerprint(self):
        """Stable digest of the numeric content, used to bind artifacts to a case"""
        digest = hashlib.sha256()
        for array in (self.A, self.b, self.C, self.cost):
            digest.update(np.ascontiguousarray(array, dtype='<f8').tobytes())
        digest.update(repr(self.balance_rhs_base).encode())
        return digest.hexdigest()


def _frozen(array):
    array = np.ascontiguousarray(array, dtype=float)
    array.setflags(write=False)
    return array


def assemble_polytope(net, ptdf, mu=None):
    """Build A, b, C and the balance row for a network and its PTDF"""
    n_bus, n_gen = net.n_bus, net.n_gen
    mu = np.zeros(n_bus) if mu is None else np.asarray(mu, dtype=float)
    if mu.shape != (n_bus,):
        raise DimensionMismatch('mu', n_bus, mu.shape)
    if ptdf.M.shape != (net.n_branch, n_bus):
        raise DimensionMismatch('ptdf', (net.n_branch, n_bus), ptdf.M.shape)

    rated = tuple(k for k, br in enumerate(net.branches) if br.is_limited)
    unrated = tuple(k for k, br in enumerate(net.branches) if not br.is_limited)

    d = net.demand
    M = ptdf.M[list(rated), :] if rated else np.zeros((0, n_bus))
    MH = M @ net.incidence_matrix()
    f_max = np.array([net.branches[k].f_max for k in rated], dtype=float)
    shift = M @ (mu - d)

    p_min = np.array([gen.p_min for gen in net.generators], dtype=float)
    p_max = np.array([gen.p_max for gen in net.generators], dtype=float)
    eye = np.eye(n_gen)
    zeros = np.zeros((n_gen, n_bus))

    A = np.vstack([eye, -eye, MH, -MH])
    b = np.concatenate([p_max, -p_min, f_max - shift, f_max + shift])
    C = np.vstack([zeros, zeros, -M, M])

    labels = (
        [RowLabel(RowKind.GEN_UPPER, g) for g in range(n_gen)]
        + [RowLabel(RowKind.GEN_LOWER, g) for g in range(n_gen)]
        + [RowLabel(RowKind.FLOW_UPPER, k) for k in rated]
        + [RowLabel(RowKind.FLOW_LOWER, k) for k in rated]
    )

    return Polytope(
        A=_frozen(A),
        b=_frozen(b),
        C=_frozen(C),
        balance_rhs_base=float(np.sum(d - mu)),
        cost=_frozen([gen.cost for gen in net.generators]),
        row_labels=tuple(labels),
        p_min=_frozen(p_min),
        p_max=_frozen(p_max),
        rated_branches=rated,
        unrated_branches=unrated,
    )


def build_polytope(net, mu=None):
    return assemble_polytope(net, compute_ptdf(net), mu)
