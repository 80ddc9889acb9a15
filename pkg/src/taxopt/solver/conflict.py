"""Conflict extraction for infeasible problems.

Small problems get a deletion filter: walk the rows, permanently drop
any row whose absence keeps the problem infeasible, and what survives
is an irreducible conflicting subsystem.  The loop repeats until the
accumulated set, removed from the original problem, restores
feasibility (several disjoint conflicts can coexist).  Above a size
threshold a cheaper elastic pass substitutes: relax every row with a
violation variable, minimize total violation and report the rows that
stay violated, again looping until removal restores feasibility.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .problem import EQUAL, GREATER, LESS, OPTIMAL, LinearProblem

_DELETION_LIMIT = 600


def _feasibility_status(problem: LinearProblem) -> str:
    from .simplex import solve_lp

    probe = LinearProblem(
        c=np.zeros(problem.num_cols),
        A=problem.A,
        senses=list(problem.senses),
        b=problem.b,
        lower=problem.lower,
        upper=problem.upper,
        is_binary=np.zeros(problem.num_cols, dtype=bool),
        row_names=list(problem.row_names),
        col_names=list(problem.col_names),
        name=problem.name,
    )
    return solve_lp(probe, find_conflict=False).status


def _elastic_violations(problem: LinearProblem) -> list[int]:
    """Rows still violated after minimizing the total elastic violation."""
    from .simplex import solve_lp

    m, n = problem.num_rows, problem.num_cols
    extra_cols = []
    extra_names = []
    for i, sense in enumerate(problem.senses):
        if sense in (LESS, EQUAL):
            extra_cols.append((i, -1.0))
            extra_names.append(f"__elastic_dn_{i}")
        if sense in (GREATER, EQUAL):
            extra_cols.append((i, 1.0))
            extra_names.append(f"__elastic_up_{i}")
    k = len(extra_cols)
    E = sp.csc_matrix(
        (np.array([v for _, v in extra_cols]),
         (np.array([r for r, _ in extra_cols]), np.arange(k))),
        shape=(m, k),
    )
    elastic = LinearProblem(
        c=np.concatenate([np.zeros(n), np.ones(k)]),
        A=sp.hstack([problem.A, E]).tocsr(),
        senses=list(problem.senses),
        b=problem.b,
        lower=np.concatenate([problem.lower, np.zeros(k)]),
        upper=np.concatenate([problem.upper, np.full(k, np.inf)]),
        is_binary=np.zeros(n + k, dtype=bool),
        row_names=list(problem.row_names),
        col_names=list(problem.col_names) + extra_names,
        name=problem.name + "_elastic",
    )
    sol = solve_lp(elastic, find_conflict=False)
    if sol.status != OPTIMAL:
        # Elastic relaxations of bounded-variable problems always solve;
        # fall back to blaming everything rather than crashing.
        return list(range(m))
    violated = set()
    for idx, (row, _) in enumerate(extra_cols):
        if sol.x[n + idx] > 1e-7 * max(1.0, abs(problem.b[row])):
            violated.add(row)
    return sorted(violated)


def _deletion_filter(problem: LinearProblem) -> list[int]:
    """Indices of one irreducible conflicting subsystem."""
    active = list(range(problem.num_rows))
    kept: list[int] = []
    candidates = list(active)
    for row in candidates:
        trial = [r for r in active if r != row]
        status = _feasibility_status(problem.without_rows(set(range(problem.num_rows)) - set(trial)))
        if status != OPTIMAL:
            active = trial  # still infeasible without it: the row is not needed
        # else: removing it restores feasibility, so the row is essential
    return active


def conflict_rows(problem: LinearProblem) -> list[str]:
    """Row names whose joint removal restores feasibility.

    On small problems each batch is an irreducible subsystem from the
    deletion filter; large problems fall back to elastic filtering.
    The accumulated answer is re-verified by an actual solve.
    """
    conflict: list[int] = []
    remaining = problem
    index_map = list(range(problem.num_rows))
    for _ in range(problem.num_rows + 1):
        if _feasibility_status(remaining) == OPTIMAL:
            break
        if remaining.num_rows <= _DELETION_LIMIT:
            batch = _deletion_filter(remaining)
        else:
            batch = _elastic_violations(remaining)
        if not batch:
            break
        conflict.extend(index_map[i] for i in batch)
        keep = [i for i in range(remaining.num_rows) if i not in set(batch)]
        index_map = [index_map[i] for i in keep]
        remaining = remaining.without_rows(set(batch))
    return [problem.row_names[i] for i in sorted(set(conflict))]


def verify_conflict(problem: LinearProblem, conflict: list[str]) -> bool:
    """True when removing the conflict rows yields a feasible problem."""
    return _feasibility_status(problem.without_rows(set(conflict))) == OPTIMAL
