"""Built-in LP/MILP solver, infeasibility conflicts and MPS exchange."""

from .conflict import conflict_rows, verify_conflict
from .milp import solve_milp
from .mps import export_mps, import_mps, read_mps, write_mps
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
    audit_solution,
    dedupe_rows,
    problems_equal,
    row_tolerance,
    slack_values,
)
from .simplex import solve_lp

__all__ = [
    "EQUAL",
    "GREATER",
    "INFEASIBLE",
    "ITERATION_LIMIT",
    "LESS",
    "OPTIMAL",
    "UNBOUNDED",
    "LinearProblem",
    "Solution",
    "audit_solution",
    "conflict_rows",
    "dedupe_rows",
    "export_mps",
    "import_mps",
    "problems_equal",
    "read_mps",
    "row_tolerance",
    "slack_values",
    "solve_lp",
    "solve_milp",
    "verify_conflict",
    "write_mps",
]
