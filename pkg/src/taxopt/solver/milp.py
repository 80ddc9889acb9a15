"""Branch-and-bound over binary variables.

Nodes carry bound overrides only; each relaxation is a fresh LP solve.
Selection is best-bound (lowest relaxation objective first, insertion
order breaking ties), branching picks the most fractional binary with
the lowest index on ties, so runs are deterministic.
"""

from __future__ import annotations

import heapq
import time

import numpy as np

from .problem import (
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    LinearProblem,
    Solution,
    slack_values,
)
from .simplex import solve_lp

_INT_TOL = 1e-6
_GAP_TOL = 1e-6


def _with_bounds(problem: LinearProblem, lower, upper,
                 lazy_seed: tuple[int, ...] | None = None) -> LinearProblem:
    meta = dict(problem.meta)
    if lazy_seed is not None:
        meta["lazy_seed"] = lazy_seed
    return LinearProblem(
        c=problem.c,
        A=problem.A,
        senses=list(problem.senses),
        b=problem.b,
        lower=lower,
        upper=upper,
        is_binary=np.zeros(problem.num_cols, dtype=bool),
        row_names=list(problem.row_names),
        col_names=list(problem.col_names),
        name=problem.name,
        meta=meta,
    )


def _binding_lazy_rows(problem: LinearProblem, x: np.ndarray) -> tuple[int, ...]:
    lazy = problem.meta.get("lazy_rows")
    if not lazy:
        return ()
    activity = problem.row_activity(x)
    tight = []
    for i in lazy:
        tol = 10.0 * max(1e-4, 1e-6 * abs(problem.b[i]))
        if abs(activity[i] - problem.b[i]) <= tol:
            tight.append(i)
    return tuple(tight)


def solve_milp(problem: LinearProblem, node_limit: int = 100_000,
               lp_iterations: int = 1_000_000) -> Solution:
    """Solve a binary MILP; continuous problems fall through to solve_lp."""
    binaries = np.nonzero(problem.is_binary)[0]
    start = time.perf_counter()
    if binaries.size == 0:
        return solve_lp(problem, max_iterations=lp_iterations)

    incumbent: np.ndarray | None = None
    incumbent_obj = np.inf
    nodes_solved = 0
    counter = 0
    root_infeasible = False
    best_bound = np.inf
    # A binary whose column only relaxes rows when it grows can be rounded
    # up in any fractional solution without losing feasibility.
    csc = problem.A.tocsc()
    round_up_safe = np.zeros(problem.num_cols, dtype=bool)
    for j in binaries:
        col = csc.getcol(j).tocoo()
        ok = True
        for i, v in zip(col.row, col.data):
            sense = problem.senses[i]
            if not ((sense == "<" and v <= 0) or (sense == ">" and v >= 0) or v == 0):
                ok = False
                break
        round_up_safe[j] = ok
    # With an all-integer objective over the integer variables (and zero
    # cost on the rest), fractional bounds round up.
    integral = bool(problem.meta.get("objective_integral")) or (
        np.all(problem.c[~problem.is_binary] == 0.0)
        and np.all(problem.c == np.round(problem.c))
    )

    def sharpen(value: float) -> float:
        if integral and np.isfinite(value):
            return float(np.ceil(value - 1e-6))
        return value

    heap = []
    root_seed = tuple(problem.meta.get("lazy_seed", ()))
    heapq.heappush(heap, (-np.inf, 0, problem.lower.copy(), problem.upper.copy(), root_seed))
    while heap:
        bound, _, lower, upper, seed = heapq.heappop(heap)
        if incumbent is not None and sharpen(bound) >= incumbent_obj - _GAP_TOL:
            continue
        if nodes_solved >= node_limit:
            best_bound = min(bound, best_bound)
            sol = Solution(status=ITERATION_LIMIT, nodes=nodes_solved,
                           wall_time=time.perf_counter() - start)
            if incumbent is not None:
                sol.x = incumbent
                sol.objective = incumbent_obj
                sol.row_activity = problem.row_activity(incumbent)
                sol.slacks = slack_values(problem, incumbent)
                sol.bound = None if not np.isfinite(best_bound) else float(best_bound)
            return sol
        relax = solve_lp(_with_bounds(problem, lower, upper, lazy_seed=seed),
                         max_iterations=lp_iterations, find_conflict=False)
        nodes_solved += 1
        if relax.status == UNBOUNDED:
            return Solution(status=UNBOUNDED, nodes=nodes_solved,
                            wall_time=time.perf_counter() - start)
        if relax.status != OPTIMAL:
            if nodes_solved == 1:
                root_infeasible = True
            continue
        if incumbent is not None and sharpen(relax.objective) >= incumbent_obj - _GAP_TOL:
            continue
        frac = np.abs(relax.x[binaries] - np.round(relax.x[binaries]))
        if np.all(frac <= _INT_TOL):
            x = relax.x.copy()
            x[binaries] = np.round(x[binaries])
            if relax.objective < incumbent_obj - 1e-12:
                incumbent = x
                incumbent_obj = float(problem.c @ x)
            continue
        fractional_cols = binaries[frac > _INT_TOL]
        if np.all(round_up_safe[fractional_cols]):
            cand = relax.x.copy()
            cand[binaries] = np.round(cand[binaries])
            cand[fractional_cols] = 1.0
            cand_obj = float(problem.c @ cand)
            if cand_obj < incumbent_obj - 1e-12:
                incumbent = cand
                incumbent_obj = cand_obj
                if sharpen(relax.objective) >= incumbent_obj - _GAP_TOL:
                    continue  # this subtree cannot beat the rounded incumbent
        pick = int(binaries[int(np.argmax(np.minimum(frac, 1.0 - frac)))])
        child_seed = _binding_lazy_rows(problem, relax.x)
        for fixed in (0.0, 1.0):
            lo2, up2 = lower.copy(), upper.copy()
            lo2[pick] = fixed
            up2[pick] = fixed
            counter += 1
            heapq.heappush(heap, (relax.objective, counter, lo2, up2, child_seed))

    elapsed = time.perf_counter() - start
    if incumbent is None:
        sol = Solution(status=INFEASIBLE, nodes=nodes_solved, wall_time=elapsed)
        if root_infeasible:
            from .conflict import conflict_rows

            sol.conflict_rows = conflict_rows(_with_bounds(problem, problem.lower, problem.upper))
        return sol
    return Solution(
        status=OPTIMAL,
        x=incumbent,
        objective=incumbent_obj,
        row_activity=problem.row_activity(incumbent),
        slacks=slack_values(problem, incumbent),
        nodes=nodes_solved,
        wall_time=elapsed,
        bound=incumbent_obj,
    )
