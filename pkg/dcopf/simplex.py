"""Bounded-variable revised simplex.

Solves

    min c'x   s.t.   A x = rhs,   lo <= x <= hi

with every bound finite. Nonbasic variables sit at one of their bounds, so the
optimal basis says directly which bounds are binding.

Pricing is Dantzig's rule (largest reduced cost magnitude, lowest index on
ties). After ``bland_after`` consecutive degenerate pivots the solver switches
to Bland's rule until a step makes progress again. The ratio test breaks ties
by the lowest variable index. With these rules the pivot sequence, and hence
the final basis, is a pure function of the input.
"""
import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

logger = logging.getLogger(__name__)


class LpStatus(enum.Enum):
    OPTIMAL = 'Optimal'
    INFEASIBLE = 'Infeasible'
    UNBOUNDED = 'Unbounded'
    ITERATION_LIMIT = 'IterationLimit'


@dataclass
class SimplexResult:
    status: LpStatus
    x: np.ndarray
    objective: float
    basis: list
    at_upper: np.ndarray
    iterations: int
    phase1_objective: float

    def nonbasic(self):
        basic = set(self.basis)
        return [j for j in range(len(self.x)) if j not in basic]


class BoundedSimplex:
    def __init__(self, A, rhs, c, lo, hi, tol=1e-9, max_iter=None, bland_after=50):
        self.A = np.asarray(A, dtype=float)
        self.rhs = np.asarray(rhs, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.n_rows, self.n_vars = self.A.shape
        self.tol = tol
        self.max_iter = max_iter or 50 * (self.n_rows + self.n_vars) + 100
        self.bland_after = bland_after

    def solve(self):
        n, R = self.n_vars, self.n_rows

        if np.any(self.lo > self.hi + self.tol):
            return self._result(LpStatus.INFEASIBLE, np.clip(self.lo, None, self.hi), [], np.zeros(n, bool), 0, np.inf)

        # Phase 1: nonbasic originals at their lower bounds, one artificial per row
        x = np.concatenate([np.minimum(self.lo, self.hi), np.zeros(R)])
        residual = self.rhs - self.A @ x[:n]
        signs = np.where(residual >= 0, 1.0, -1.0)
        A_full = np.hstack([self.A, np.diag(signs)])
        lo_full = np.concatenate([self.lo, np.zeros(R)])
        hi_full = np.concatenate([self.hi, np.full(R, np.inf)])
        x[n:] = np.abs(residual)
        basis = list(range(n, n + R))
        at_upper = np.zeros(n + R, dtype=bool)

        phase1_cost = np.concatenate([np.zeros(n), np.ones(R)])
        status, iterations = self._iterate(A_full, phase1_cost, lo_full, hi_full, x, basis, at_upper, 0)
        phase1_objective = float(np.sum(x[n:]))
        scale = max(1.0, float(np.max(np.abs(self.rhs))) if R else 1.0)
        if status is not LpStatus.OPTIMAL or phase1_objective > 1e-7 * scale:
            if status is LpStatus.ITERATION_LIMIT:
                return self._result(status, x[:n], basis, at_upper[:n], iterations, phase1_objective)
            return self._result(LpStatus.INFEASIBLE, x[:n], basis, at_upper[:n], iterations, phase1_objective)

        self._drive_out_artificials(A_full, x, basis, at_upper)

        # Phase 2: artificials pinned at zero
        hi_full[n:] = 0.0
        x[n:] = 0.0
        phase2_cost = np.concatenate([self.c, np.zeros(R)])
        status, iterations = self._iterate(
            A_full, phase2_cost, lo_full, hi_full, x, basis, at_upper, iterations
        )
        return self._result(status, x[:n], basis, at_upper[:n], iterations, phase1_objective)

    def _result(self, status, x, basis, at_upper, iterations, phase1_objective):
        x = np.array(x, dtype=float)
        objective = float(self.c @ x) if status is LpStatus.OPTIMAL else np.nan
        return SimplexResult(
            status=status,
            x=x,
            objective=objective,
            basis=list(basis),
            at_upper=np.array(at_upper, dtype=bool),
            iterations=iterations,
            phase1_objective=phase1_objective,
        )

    def _basic_values(self, lu, A_full, x, basis):
        nonbasic_x = x.copy()
        nonbasic_x[basis] = 0.0
        return lu_solve(lu, self.rhs - A_full @ nonbasic_x)

    def _iterate(self, A_full, cost, lo, hi, x, basis, at_upper, iterations):
        R = self.n_rows
        tol = self.tol
        movable = hi - lo > tol
        degenerate_run = 0

        while True:
            if iterations >= self.max_iter:
                logger.warning(f"Simplex stopped at the iteration limit ({self.max_iter})")
                return LpStatus.ITERATION_LIMIT, iterations
            if R == 0:
                return LpStatus.OPTIMAL, iterations

            lu = lu_factor(A_full[:, basis], check_finite=False)
            x[basis] = self._basic_values(lu, A_full, x, basis)

            y = lu_solve(lu, cost[basis], trans=1)
            reduced = cost - A_full.T @ y
            reduced[basis] = 0.0

            improving = movable & (
                (~at_upper & (reduced < -tol)) | (at_upper & (reduced > tol))
            )
            improving[basis] = False
            candidates = np.flatnonzero(improving)
            if candidates.size == 0:
                return LpStatus.OPTIMAL, iterations

            if degenerate_run > self.bland_after:
                entering = int(candidates[0])
            else:
                # argmax returns the first (lowest) index among equal magnitudes
                entering = int(candidates[np.argmax(np.abs(reduced[candidates]))])

            direction = -1.0 if at_upper[entering] else 1.0
            column = lu_solve(lu, A_full[:, entering])
            delta = -direction * column

            theta = hi[entering] - lo[entering]
            leave = None
            basic_lo = lo[basis]
            basic_hi = hi[basis]
            x_basic = x[basis]
            with np.errstate(divide='ignore', invalid='ignore'):
                limits = np.full(R, np.inf)
                down = delta < -1e-11
                up = delta > 1e-11
                limits[down] = (x_basic[down] - basic_lo[down]) / -delta[down]
                limits[up] = (basic_hi[up] - x_basic[up]) / delta[up]
            limits = np.maximum(limits, 0.0)

            if np.any(np.isfinite(limits)):
                best = float(np.min(limits))
                if best < theta - tol or not np.isfinite(theta):
                    ties = np.flatnonzero(limits <= best + tol)
                    leave = int(min(ties, key=lambda i: basis[i]))
                    theta = float(limits[leave])

            if not np.isfinite(theta):
                return LpStatus.UNBOUNDED, iterations

            x[entering] += direction * theta
            x[basis] = x_basic + delta * theta
            if leave is None:
                at_upper[entering] = not at_upper[entering]
                x[entering] = hi[entering] if at_upper[entering] else lo[entering]
            else:
                leaving = basis[leave]
                at_upper[leaving] = bool(delta[leave] > 0)
                x[leaving] = hi[leaving] if at_upper[leaving] else lo[leaving]
                basis[leave] = entering
                at_upper[entering] = False

            degenerate_run = degenerate_run + 1 if theta <= tol else 0
            iterations += 1

    def _drive_out_artificials(self, A_full, x, basis, at_upper):
        """Swap artificials left basic at zero for original columns"""
        n = self.n_vars
        for position in range(len(basis)):
            if basis[position] < n:
                continue
            lu = lu_factor(A_full[:, basis], check_finite=False)
            unit = np.zeros(self.n_rows)
            unit[position] = 1.0
            row = lu_solve(lu, unit, trans=1) @ A_full[:, :n]
            basic = set(basis)
            choices = [j for j in range(n) if j not in basic and abs(row[j]) > 1e-9]
            if not choices:
                logger.debug(f"Row {position} is redundant; artificial stays basic")
                continue
            movable = [j for j in choices if self.hi[j] - self.lo[j] > self.tol]
            entering = (movable or choices)[0]
            artificial = basis[position]
            basis[position] = entering
            at_upper[artificial] = False
            x[artificial] = 0.0
