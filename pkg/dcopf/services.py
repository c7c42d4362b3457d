"""Solve the DC-OPF, read off its active set, and recover vertices from active sets."""
import enum
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DegenerateUnresolvable, SingularBasis
from .simplex import BoundedSimplex, LpStatus

logger = logging.getLogger(__name__)

TOL_ACTIVE = 1e-6
TOL_FEASIBLE = 1e-6
SINGULAR_CONDITION = 1e12


class SolveStatus(enum.Enum):
    OPTIMAL = 'Optimal'
    INFEASIBLE = 'Infeasible'
    UNBOUNDED = 'Unbounded'


@dataclass(frozen=True)
class ActiveSet:
    """Canonical active set: strictly increasing row indices into Polytope.A"""
    rows: tuple

    def __post_init__(self):
        rows = tuple(int(r) for r in self.rows)
        if any(a >= b for a, b in zip(rows, rows[1:])):
            raise ValueError(f"Active set rows must be strictly increasing: {rows}")
        object.__setattr__(self, 'rows', rows)

    @classmethod
    def from_rows(cls, rows):
        return cls(tuple(sorted(set(int(r) for r in rows))))

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __contains__(self, row):
        return row in self.rows

    def to_list(self):
        return list(self.rows)


@dataclass(frozen=True)
class OptimalPoint:
    status: SolveStatus
    p_star: Optional[np.ndarray]
    cost: float
    active_set: Optional[ActiveSet]
    iterations: int = 0
    phase1_objective: float = 0.0

    @property
    def is_optimal(self):
        return self.status is SolveStatus.OPTIMAL


@dataclass(frozen=True)
class FeasibilityCheck:
    feasible: bool
    max_violation: float
    balance_residual: float


def basis_matrix(poly, rows):
    """B = [A_rows; e']"""
    rows = list(rows)
    return np.vstack([poly.A[rows, :], np.ones((1, poly.n_gen))])


def is_nonsingular(B):
    return B.shape[0] == B.shape[1] and np.linalg.cond(B) < SINGULAR_CONDITION


def _lp_data(poly, omega):
    """Equality form over x = [p, t] where t holds the rated branch flows"""
    n_gen, n_rated = poly.n_gen, poly.n_rated
    rhs_rows = poly.rhs(omega)
    upper = rhs_rows[2 * n_gen:2 * n_gen + n_rated]
    lower = -rhs_rows[2 * n_gen + n_rated:]
    MH = poly.A[2 * n_gen:2 * n_gen + n_rated, :]

    A_eq = np.zeros((n_rated + 1, n_gen + n_rated))
    A_eq[:n_rated, :n_gen] = MH
    A_eq[:n_rated, n_gen:] = -np.eye(n_rated)
    A_eq[n_rated, :n_gen] = 1.0
    rhs = np.zeros(n_rated + 1)
    rhs[n_rated] = poly.balance_rhs(omega)

    c = np.concatenate([poly.cost, np.zeros(n_rated)])
    lo = np.concatenate([poly.p_min, lower])
    hi = np.concatenate([poly.p_max, upper])
    return A_eq, rhs, c, lo, hi


def _basis_rows(poly, result):
    """Map nonbasic variables at a bound to the polytope rows they make binding"""
    n_gen, n_rated = poly.n_gen, poly.n_rated
    rows = []
    for j in result.nonbasic():
        upper = bool(result.at_upper[j])
        if j < n_gen:
            rows.append(j if upper else n_gen + j)
        else:
            k = j - n_gen
            rows.append(2 * n_gen + k if upper else 2 * n_gen + n_rated + k)
    return rows


def solve_dcopf(poly, omega, tol_active=TOL_ACTIVE):
    """Minimize c'p over P(w); returns status instead of raising on infeasibility"""
    omega = poly.check_omega(omega)
    A_eq, rhs, c, lo, hi = _lp_data(poly, omega)
    result = BoundedSimplex(A_eq, rhs, c, lo, hi).solve()

    if result.status is LpStatus.INFEASIBLE:
        return OptimalPoint(SolveStatus.INFEASIBLE, None, np.nan, None, result.iterations, result.phase1_objective)
    if result.status is not LpStatus.OPTIMAL:
        logger.warning(f"LP ended with status {result.status.value}")
        return OptimalPoint(SolveStatus.UNBOUNDED, None, np.nan, None, result.iterations, result.phase1_objective)

    p_star = result.x[:poly.n_gen].copy()
    active_set = extract_active_set(
        poly, p_star, omega, basis_hint=_basis_rows(poly, result), tol_active=tol_active,
    )
    return OptimalPoint(
        status=SolveStatus.OPTIMAL,
        p_star=p_star,
        cost=float(poly.cost @ p_star),
        active_set=active_set,
        iterations=result.iterations,
        phase1_objective=result.phase1_objective,
    )


def extract_active_set(poly, p_star, omega, basis_hint=None, tol_active=TOL_ACTIVE):
    """Pick the n_g - 1 binding rows that pin p_star.

    The solver's optimal basis is preferred; without a usable hint the tight
    rows are taken greedily in row order, skipping rows that add no rank.
    """
    omega = poly.check_omega(omega)
    needed = poly.n_gen - 1
    gap = np.abs(poly.A @ p_star - poly.rhs(omega))
    tight = np.flatnonzero(gap <= tol_active)

    if basis_hint is not None:
        rows = sorted(set(int(r) for r in basis_hint))
        if (
            len(rows) == needed
            and all(gap[r] <= tol_active for r in rows)
            and is_nonsingular(basis_matrix(poly, rows))
        ):
            return ActiveSet(tuple(rows))
        logger.warning(f"Basis hint {rows} rejected; falling back to tight-row selection")

    chosen = []
    rank = 1
    for row in tight:
        if len(chosen) == needed:
            break
        candidate = np.vstack([basis_matrix(poly, chosen), poly.A[row:row + 1, :]])
        if np.linalg.matrix_rank(candidate) > rank:
            chosen.append(int(row))
            rank += 1

    if len(chosen) < needed:
        raise DegenerateUnresolvable(tight, needed)
    return ActiveSet(tuple(chosen))


def recover_solution(aset, poly, omega):
    """Vertex of the active set: B^-1 [b_A + C_A w; e'(d - mu - w)]"""
    omega = poly.check_omega(omega)
    rows = list(aset.rows)
    B = basis_matrix(poly, rows)
    if not is_nonsingular(B):
        raise SingularBasis(rows)
    rhs = np.concatenate([poly.b[rows] + poly.C[rows, :] @ omega, [poly.balance_rhs(omega)]])
    try:
        return np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError as e:
        raise SingularBasis(rows) from e


def check_feasible(p, poly, omega, tol=TOL_FEASIBLE):
    omega = poly.check_omega(omega)
    p = np.asarray(p, dtype=float)
    violation = poly.A @ p - poly.rhs(omega)
    max_violation = float(np.max(violation)) if violation.size else 0.0
    residual = float(np.sum(p) - poly.balance_rhs(omega))
    return FeasibilityCheck(
        feasible=max_violation <= tol and abs(residual) <= tol,
        max_violation=max_violation,
        balance_residual=residual,
    )
