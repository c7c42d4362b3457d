"""Power transfer distribution factors for the DC network model."""
from dataclasses import dataclass

import numpy as np

from .exceptions import SingularSusceptance


@dataclass(frozen=True)
class Ptdf:
    M: np.ndarray
    slack_bus: int

    @property
    def n_branch(self):
        return self.M.shape[0]

    @property
    def n_bus(self):
        return self.M.shape[1]


def branch_susceptance_matrices(net):
    """Nodal susceptance matrix B_bus and branch matrix B_f"""
    n, m = net.n_bus, net.n_branch
    B_f = np.zeros((m, n))
    for k, branch in enumerate(net.branches):
        B_f[k, branch.from_bus] += branch.susceptance
        B_f[k, branch.to_bus] -= branch.susceptance
    incidence = np.zeros((m, n))
    for k, branch in enumerate(net.branches):
        incidence[k, branch.from_bus] = 1.0
        incidence[k, branch.to_bus] = -1.0
    B_bus = incidence.T @ B_f
    return B_bus, B_f


def compute_ptdf(net, slack_bus=None):
    """PTDF matrix M (branches x buses) with the slack column held at zero.

    Flows follow the from->to orientation of each branch: a positive entry
    means an injection at that bus (withdrawn at the slack) pushes power from
    the branch's from-bus towards its to-bus.
    """
    slack = net.slack_bus if slack_bus is None else slack_bus
    n, m = net.n_bus, net.n_branch
    M = np.zeros((m, n))
    if n > 1 and m > 0:
        B_bus, B_f = branch_susceptance_matrices(net)
        keep = np.array([i for i in range(n) if i != slack])
        B_red = B_bus[np.ix_(keep, keep)]
        try:
            X = np.linalg.solve(B_red, np.eye(len(keep)))
        except np.linalg.LinAlgError as e:
            raise SingularSusceptance(str(e)) from e
        if not np.all(np.isfinite(X)) or np.linalg.cond(B_red) > 1e14:
            raise SingularSusceptance('ill-conditioned reduced system')
        M[:, keep] = B_f[:, keep] @ X
    M.setflags(write=False)
    return Ptdf(M=M, slack_bus=slack)


def flows(ptdf, injection):
    """Branch flows for a nodal injection vector"""
    return ptdf.M @ np.asarray(injection, dtype=float)
