"""Bounded-variable two-phase revised simplex.

The problem arrives in row form; internally every row gets a slack so
the working system is ``[A | I] v = b`` with slack bounds encoding the
row sense.  Rows that the starting point cannot satisfy get an
artificial column, phase 1 drives the artificials to zero, and phase 2
pins them there by fixing their bounds.

Basis factorizations go through LAPACK for small bases and SuperLU for
large sparse ones, with product-form eta updates between
refactorizations.  Entering variables are priced by the most negative
reduced cost; after a run of non-improving pivots the selection drops
to Bland's rule until the objective moves again, which is enough to
escape the heavily degenerate recovery systems.
"""

from __future__ import annotations

import time

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import lu_factor, lu_solve

from ..errors import SolverError
from .problem import (
    EQUAL,
    GREATER,
    INFEASIBLE,
    ITERATION_LIMIT,
    LESS,
    OPTIMAL,
    UNBOUNDED,
    LinearProblem,
    Solution,
    row_tolerance,
    slack_values,
)

_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_STALL_LIMIT = 50
_ETA_LIMIT = 64
_DENSE_LIMIT = 400  # rows at or below this use dense LU factors

AT_LOWER = 0
AT_UPPER = 1
BASIC = 2
FREE = 3  # nonbasic with both bounds infinite, parked at zero


class _Basis:
    """Factorized basis with product-form updates."""

    def __init__(self, cols: sp.csc_matrix, basis: np.ndarray):
        self.cols = cols
        self.m = cols.shape[0]
        self.dense = self.m <= _DENSE_LIMIT
        self.basis = basis
        self.etas: list[tuple[int, np.ndarray]] = []
        self.refactor()

    def refactor(self):
        self.etas.clear()
        B = self.cols[:, self.basis]
        if self.dense:
            self._lu = lu_factor(B.toarray())
        else:
            self._lu = spla.splu(B.tocsc(), permc_spec="COLAMD")

    def _base_solve(self, v: np.ndarray) -> np.ndarray:
        if self.dense:
            return lu_solve(self._lu, v)
        return self._lu.solve(v)

    def _base_solve_t(self, v: np.ndarray) -> np.ndarray:
        if self.dense:
            return lu_solve(self._lu, v, trans=1)
        return self._lu.solve(v, trans="T")

    def solve(self, v: np.ndarray) -> np.ndarray:
        x = self._base_solve(v)
        for r, t in self.etas:
            xr = x[r] / t[r]
            x -= t * xr
            x[r] = xr
        return x

    def solve_t(self, v: np.ndarray) -> np.ndarray:
        z = np.array(v, dtype=float)
        for r, t in reversed(self.etas):
            zr = (z[r] - (t @ z) + t[r] * z[r]) / t[r]
            z[r] = zr
        return self._base_solve_t(z)

    def replace(self, pos: int, new_col: int, t: np.ndarray):
        self.basis[pos] = new_col
        self.etas.append((pos, t.copy()))
        if len(self.etas) > _ETA_LIMIT:
            self.refactor()


def _slack_bounds(sense: str) -> tuple[float, float]:
    if sense == LESS:
        return 0.0, np.inf
    if sense == GREATER:
        return -np.inf, 0.0
    return 0.0, 0.0


def _starting_point(problem: LinearProblem) -> np.ndarray:
    """Pick a bound for every structural column, then greedily flip columns
    when moving to the other bound lowers the total row violation."""
    n = problem.num_cols
    lo, up = problem.lower, problem.upper
    x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(up), up, 0.0))
    both = np.isfinite(lo) & np.isfinite(up)
    prefer_upper = both & (np.abs(up) < np.abs(lo))
    x[prefer_upper] = up[prefer_upper]

    sense_lo = np.array([_slack_bounds(s)[0] for s in problem.senses])
    sense_up = np.array([_slack_bounds(s)[1] for s in problem.senses])
    resid = problem.b - problem.row_activity(x)

    def violation(r):
        return np.sum(np.maximum(sense_lo - r, 0.0)[np.isfinite(sense_lo)]) + \
            np.sum(np.maximum(r - sense_up, 0.0)[np.isfinite(sense_up)])

    csc = problem.A.tocsc()
    current = violation(resid)
    for j in range(n):
        if not both[j] or lo[j] == up[j]:
            continue
        other = up[j] if x[j] == lo[j] else lo[j]
        col = csc.getcol(j).toarray().ravel()
        cand = resid - col * (other - x[j])
        v = violation(cand)
        if v < current - 1e-12:
            x[j] = other
            resid = cand
            current = v
    return x


class _Simplex:
    def __init__(self, problem: LinearProblem, max_iterations: int):
        self.problem = problem
        self.max_iterations = max_iterations
        self.m = problem.num_rows
        self.n = problem.num_cols
        self.iterations = 0
        self._setup()

    def _setup(self):
        p = self.problem
        m, n = self.m, self.n
        x_start = _starting_point(p)
        slack_lo = np.array([_slack_bounds(s)[0] for s in p.senses])
        slack_up = np.array([_slack_bounds(s)[1] for s in p.senses])

        # Row equilibration: rows with currency-scale coefficients would
        # otherwise dominate every feasibility tolerance.
        row_max = np.zeros(m)
        csr = p.A.tocsr()
        for i in range(m):
            sl = csr.data[csr.indptr[i]:csr.indptr[i + 1]]
            row_max[i] = np.max(np.abs(sl)) if sl.size else 0.0
        self.row_scale = np.maximum(row_max, 1.0)
        A_scaled = sp.diags(1.0 / self.row_scale) @ csr
        self.b = p.b / self.row_scale

        resid = self.b - np.asarray(A_scaled @ x_start).ravel()
        clipped = np.clip(resid, slack_lo, slack_up)
        art_resid = resid - clipped
        art_rows = np.nonzero(np.abs(art_resid) > 1e-12)[0]

        self.num_art = len(art_rows)
        cols = [A_scaled.tocsc(), sp.identity(m, format="csc")]
        if self.num_art:
            art = sp.csc_matrix(
                (np.sign(art_resid[art_rows]), (art_rows, np.arange(self.num_art))),
                shape=(m, self.num_art),
            )
            cols.append(art)
        self.M = sp.hstack(cols, format="csc")
        self.MT = self.M.T.tocsr()
        total = n + m + self.num_art

        self.lo = np.concatenate([p.lower, slack_lo, np.zeros(self.num_art)])
        self.up = np.concatenate([p.upper, slack_up, np.full(self.num_art, np.inf)])
        self.x = np.zeros(total)
        self.x[:n] = x_start
        self.x[n:n + m] = clipped
        self.x[n + m:] = np.abs(art_resid[art_rows])

        self.status = np.full(total, AT_LOWER, dtype=np.int8)
        at_upper = np.isfinite(self.up) & ~np.isfinite(self.lo)
        self.status[at_upper] = AT_UPPER
        self.status[~np.isfinite(self.lo) & ~np.isfinite(self.up)] = FREE
        both = np.isfinite(self.lo) & np.isfinite(self.up)
        self.status[both & (self.x == self.up) & (self.up > self.lo)] = AT_UPPER

        basis = np.arange(n, n + m)
        art_col = n + m
        for k, i in enumerate(art_rows):
            basis[i] = art_col + k
        self.basis = basis
        self.status[basis] = BASIC
        # Slacks displaced by artificials sit at their clipped bound.
        for k, i in enumerate(art_rows):
            s = n + i
            self.status[s] = AT_UPPER if (
                np.isfinite(self.up[s]) and self.x[s] == self.up[s] and self.up[s] != self.lo[s]
            ) else AT_LOWER
            if not np.isfinite(self.lo[s]) and self.status[s] == AT_LOWER:
                self.status[s] = AT_UPPER
        self.factor = _Basis(self.M, self.basis)
        self._recompute_basics()

        self.c_phase1 = np.zeros(total)
        if self.num_art:
            self.c_phase1[n + m:] = 1.0

    def _recompute_basics(self):
        nonbasic_x = self.x.copy()
        nonbasic_x[self.basis] = 0.0
        rhs = self.b - self.M @ nonbasic_x
        self.x[self.basis] = self.factor.solve(rhs)

    def _phase1_objective(self) -> float:
        if not self.num_art:
            return 0.0
        return float(np.sum(self.x[self.n + self.m:]))

    def _reduced_costs(self, c: np.ndarray) -> np.ndarray:
        y = self.factor.solve_t(c[self.basis])
        return c - self.MT @ y

    def _entering(self, d: np.ndarray, bland: bool) -> int:
        movable = (self.status != BASIC) & (self.up > self.lo)
        favorable = np.where(
            self.status == AT_LOWER, d < -_COST_TOL,
            np.where(self.status == AT_UPPER, d > _COST_TOL, np.abs(d) > _COST_TOL),
        )
        cand = np.nonzero(movable & favorable)[0]
        if cand.size == 0:
            return -1
        if bland:
            return int(cand[0])
        scores = np.abs(d[cand])
        return int(cand[int(np.argmax(scores))])

    def _ratio_test(self, j: int, direction: float, t: np.ndarray, bland: bool):
        """Largest step for entering column j; returns (theta, leaving_pos).

        ``leaving_pos`` is -1 for a bound flip and -2 for an unbounded ray.
        """
        theta = np.inf
        leaving = -2
        if np.isfinite(self.lo[j]) and np.isfinite(self.up[j]):
            theta = self.up[j] - self.lo[j]
            leaving = -1
        xb = self.x[self.basis]
        step = direction * t
        lo_b = self.lo[self.basis]
        up_b = self.up[self.basis]
        with np.errstate(divide="ignore", invalid="ignore"):
            room_dn = np.where(step > _PIVOT_TOL, (xb - lo_b) / step, np.inf)
            room_up = np.where(step < -_PIVOT_TOL, (xb - up_b) / step, np.inf)
        room = np.minimum(room_dn, room_up)
        room = np.where(np.isnan(room), np.inf, room)
        best = float(np.min(room)) if room.size else np.inf
        if np.isfinite(best) and (best < theta - 1e-12 or leaving == -2):
            theta = max(best, 0.0)
            ties = np.nonzero(room <= best + 1e-12)[0]
            if bland:
                leaving = int(ties[int(np.argmin(self.basis[ties]))])
            else:
                leaving = int(ties[int(np.argmax(np.abs(t[ties])))])
        return theta, leaving

    def _pivot(self, j: int, d_j: float, bland: bool) -> str:
        if self.status[j] == AT_UPPER:
            direction = -1.0
        elif self.status[j] == FREE:
            direction = -1.0 if d_j > 0 else 1.0
        else:
            direction = 1.0
        col = self.M.getcol(j).toarray().ravel()
        t = self.factor.solve(col)
        theta, leaving = self._ratio_test(j, direction, t, bland)
        if leaving == -2:
            return "unbounded"
        if theta > 0:
            self.x[self.basis] -= direction * theta * t
        if leaving == -1:
            self.x[j] = self.up[j] if direction > 0 else self.lo[j]
            self.status[j] = AT_UPPER if direction > 0 else AT_LOWER
            return "flip"
        if abs(t[leaving]) < _PIVOT_TOL:
            self.factor.refactor()
            self._recompute_basics()
            return "refactor"
        out = self.basis[leaving]
        self.x[j] = self.x[j] + direction * theta
        step = direction * t[leaving]
        if self.lo[out] == self.up[out]:
            self.x[out] = self.lo[out]
            self.status[out] = AT_LOWER
        elif step > 0:
            self.x[out] = self.lo[out]
            self.status[out] = AT_LOWER
        else:
            self.x[out] = self.up[out]
            self.status[out] = AT_UPPER
        if not np.isfinite(self.x[out]):
            self.x[out] = 0.0
            self.status[out] = FREE if not (np.isfinite(self.lo[out]) or np.isfinite(self.up[out])) else self.status[out]
        if out >= self.n + self.m:
            # An artificial that leaves the basis never comes back.
            self.lo[out] = self.up[out] = 0.0
            self.x[out] = 0.0
        self.status[j] = BASIC
        self.factor.replace(leaving, j, t)
        return "pivot"

    def run_phase(self, c: np.ndarray, phase: int) -> str:
        stall = 0
        bland = False
        last_obj = float(c @ self.x)
        refresh = 0
        while self.iterations < self.max_iterations:
            self.iterations += 1
            d = self._reduced_costs(c)
            j = self._entering(d, bland)
            if j < 0:
                return OPTIMAL
            outcome = self._pivot(j, float(d[j]), bland)
            if outcome == "unbounded":
                if phase == 1:
                    raise SolverError("phase-1 objective is bounded by construction")
                return UNBOUNDED
            refresh += 1
            if refresh % 200 == 0:
                self.factor.refactor()
                self._recompute_basics()
            obj = float(c @ self.x)
            if obj < last_obj - 1e-10 * (1.0 + abs(last_obj)):
                stall = 0
                bland = False
            else:
                stall += 1
                if stall >= _STALL_LIMIT:
                    bland = True
            last_obj = obj
            if phase == 1 and obj <= self._phase1_cutoff:
                return OPTIMAL
        return ITERATION_LIMIT

    def solve(self) -> tuple[str, np.ndarray]:
        n, m = self.n, self.m
        self._phase1_cutoff = 1e-10 * (1.0 + m)
        if self.num_art:
            status = self.run_phase(self.c_phase1, phase=1)
            if status == ITERATION_LIMIT:
                return status, self.x[:n]
            if self._phase1_objective() > 1e-7 * (1.0 + m) ** 0.5:
                return INFEASIBLE, self.x[:n]
            # Pin artificials at zero for phase 2.
            self.lo[n + m:] = 0.0
            self.up[n + m:] = 0.0
            self.x[n + m:] = 0.0
        c = np.zeros(n + m + self.num_art)
        c[:n] = self.problem.c
        status = self.run_phase(c, phase=2)
        self.factor.refactor()
        self._recompute_basics()
        return status, self.x[:n]


def _snap_to_bounds(x: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    out = x.copy()
    snap_lo = np.isfinite(lower) & (np.abs(out - lower) < 1e-9)
    snap_up = np.isfinite(upper) & (np.abs(out - upper) < 1e-9)
    out[snap_lo] = lower[snap_lo]
    out[snap_up] = upper[snap_up]
    return np.clip(out, lower, upper)


def solve_lp(problem: LinearProblem, max_iterations: int = 1_000_000,
             find_conflict: bool = True) -> Solution:
    """Solve an LP; integrality flags are rejected (see solve_milp).

    Problems whose meta marks ``lazy_rows`` are solved by row
    activation: start from the always-active rows and pull in lazy rows
    as the interim optimum violates them.  A relaxation optimum that
    satisfies every row is the optimum of the full problem.
    """
    if np.any(problem.is_binary):
        raise SolverError("problem has integrality flags; use solve_milp")
    lazy = problem.meta.get("lazy_rows")
    if lazy:
        return _solve_with_lazy_rows(problem, sorted(set(lazy)), max_iterations,
                                     find_conflict)
    return _solve_direct(problem, max_iterations, find_conflict)


def _violated_rows(problem: LinearProblem, rows: list[int], x: np.ndarray) -> list[int]:
    activity = problem.row_activity(x)
    out = []
    for i in rows:
        tol = 0.5 * row_tolerance(problem.b[i])
        gap = activity[i] - problem.b[i]
        sense = problem.senses[i]
        if (sense == LESS and gap > tol) or (sense == GREATER and gap < -tol) \
                or (sense == EQUAL and abs(gap) > tol):
            out.append(i)
    return out


def _solve_with_lazy_rows(problem: LinearProblem, lazy: list[int],
                          max_iterations: int, find_conflict: bool) -> Solution:
    start = time.perf_counter()
    lazy_set = set(lazy)
    seed = [i for i in problem.meta.get("lazy_seed", ()) if i in lazy_set]
    seed_set = set(seed)
    active = [i for i in range(problem.num_rows) if i not in lazy_set] + seed
    inactive = [i for i in lazy if i not in seed_set]
    iterations = 0
    for _ in range(len(lazy) + 2):
        sub = problem.with_rows(active)
        sol = _solve_direct(sub, max_iterations, find_conflict=False)
        iterations += sol.iterations
        if sol.status == INFEASIBLE:
            # The subset is a relaxation: its infeasibility is final.
            out = Solution(status=INFEASIBLE, iterations=iterations,
                           wall_time=time.perf_counter() - start)
            if find_conflict:
                from .conflict import conflict_rows

                out.conflict_rows = conflict_rows(problem)
                out.wall_time = time.perf_counter() - start
            return out
        if sol.status != OPTIMAL:
            if not inactive:
                sol.iterations = iterations
                return sol
            active = active + inactive  # resolve with everything
            inactive = []
            continue
        violated = _violated_rows(problem, inactive, sol.x)
        if not violated:
            return Solution(
                status=OPTIMAL,
                x=sol.x,
                objective=float(problem.c @ sol.x),
                row_activity=problem.row_activity(sol.x),
                slacks=slack_values(problem, sol.x),
                iterations=iterations,
                wall_time=time.perf_counter() - start,
            )
        vset = set(violated)
        active = active + violated
        inactive = [i for i in inactive if i not in vset]
    return _solve_direct(problem, max_iterations, find_conflict)


def _solve_direct(problem: LinearProblem, max_iterations: int = 1_000_000,
                  find_conflict: bool = True) -> Solution:
    start = time.perf_counter()
    if problem.num_rows == 0:
        x = _starting_point(problem)
        better = np.where(problem.c > 0, problem.lower, np.where(problem.c < 0, problem.upper, x))
        x = np.where(problem.c != 0, better, x)
        if not np.all(np.isfinite(x[problem.c != 0])):
            return Solution(status=UNBOUNDED, wall_time=time.perf_counter() - start)
        x = np.where(np.isfinite(x), x, 0.0)
        return Solution(status=OPTIMAL, x=x, objective=float(problem.c @ x),
                        row_activity=np.zeros(0), slacks=np.zeros(0),
                        wall_time=time.perf_counter() - start)
    engine = _Simplex(problem, max_iterations)
    status, x = engine.solve()
    elapsed = time.perf_counter() - start
    if status == OPTIMAL:
        x = _snap_to_bounds(x, problem.lower, problem.upper)
        return Solution(
            status=OPTIMAL,
            x=x,
            objective=float(problem.c @ x),
            row_activity=problem.row_activity(x),
            slacks=slack_values(problem, x),
            iterations=engine.iterations,
            wall_time=elapsed,
        )
    sol = Solution(status=status, iterations=engine.iterations, wall_time=elapsed)
    if status == INFEASIBLE and find_conflict:
        from .conflict import conflict_rows

        sol.conflict_rows = conflict_rows(problem)
        sol.wall_time = time.perf_counter() - start
    return sol
