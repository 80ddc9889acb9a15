"""Problem and solution containers plus the independent feasibility audit."""

from __future__ import annotations
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

LESS = "<"
EQUAL = "="
GREATER = ">"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


def row_tolerance(rhs: float) -> float:
    """Feasibility tolerance for one row: 1e-6 relative, 1e-4 absolute floor."""
    return max(1e-4, 1e-6 * abs(rhs))


@dataclass
class LinearProblem:
    """A linear (or binary mixed-integer) program in row form, minimization."""

    c: np.ndarray
    A: sp.csr_matrix
    senses: list[str]
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    is_binary: np.ndarray
    row_names: list[str]
    col_names: list[str]
    name: str = "problem"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.is_binary = np.asarray(self.is_binary, dtype=bool)
        if not sp.issparse(self.A):
            self.A = sp.csr_matrix(np.atleast_2d(np.asarray(self.A, dtype=float)))
        self.A = self.A.tocsr()
        self.validate()

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def num_cols(self) -> int:
        return self.A.shape[1]

    def validate(self):
        m, n = self.A.shape
        if not (len(self.c) == len(self.lower) == len(self.upper)
                == len(self.is_binary) == len(self.col_names) == n):
            raise ValueError("column dimensions disagree")
        if not (len(self.b) == len(self.senses) == len(self.row_names) == m):
            raise ValueError("row dimensions disagree")
        if len(set(self.row_names)) != m or len(set(self.col_names)) != n:
            raise ValueError("row or column names are not unique")
        if set(self.row_names) & set(self.col_names):
            raise ValueError("a row and a column share a name")
        for s in self.senses:
            if s not in (LESS, EQUAL, GREATER):
                raise ValueError(f"unknown row sense {s!r}")
        if not np.all(np.isfinite(self.A.data)):
            raise ValueError("matrix coefficients must be finite")
        if not (np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.c))):
            raise ValueError("objective and right-hand sides must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(self.is_binary):
            bad = self.is_binary & ((self.lower < -1e-12) | (self.upper > 1 + 1e-12))
            if np.any(bad):
                raise ValueError("binary variables need bounds within [0, 1]")

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.A @ x).ravel()

    def with_rows(self, keep: list[int]) -> "LinearProblem":
        """Copy restricted to the given row indices (in the given order)."""
        meta = {k: v for k, v in self.meta.items() if k != "lazy_rows"}
        return LinearProblem(
            c=self.c.copy(),
            A=self.A[keep, :],
            senses=[self.senses[i] for i in keep],
            b=self.b[keep],
            lower=self.lower.copy(),
            upper=self.upper.copy(),
            is_binary=self.is_binary.copy(),
            row_names=[self.row_names[i] for i in keep],
            col_names=list(self.col_names),
            name=self.name,
            meta=meta,
        )

    def without_rows(self, drop: set[int] | set[str]) -> "LinearProblem":
        """Copy with the given rows (by index or name) removed."""
        drop_idx = {d if isinstance(d, int) else self.row_names.index(d) for d in drop}
        return self.with_rows([i for i in range(self.num_rows) if i not in drop_idx])


@dataclass
class Solution:
    """Outcome of a solve, audited independently of the solver internals."""

    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    row_activity: np.ndarray | None = None
    slacks: np.ndarray | None = None
    conflict_rows: list[str] = field(default_factory=list)
    iterations: int = 0
    nodes: int = 0
    wall_time: float = 0.0
    bound: float | None = None

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


def audit_solution(problem: LinearProblem, x: np.ndarray) -> list[str]:
    """Re-check a solution row by row, outside the solver.

    Returns human-readable violations; an empty list means the point
    satisfies every row, bound and integrality flag within tolerance.
    """
    issues = []
    activity = problem.row_activity(x)
    for i, (sense, rhs) in enumerate(zip(problem.senses, problem.b)):
        tol = row_tolerance(rhs)
        gap = activity[i] - rhs
        bad = (sense == LESS and gap > tol) or (sense == GREATER and gap < -tol) \
            or (sense == EQUAL and abs(gap) > tol)
        if bad:
            issues.append(
                f"row {problem.row_names[i]!r}: activity {activity[i]:.6f} "
                f"violates {sense} {rhs:.6f}"
            )
    for j in range(problem.num_cols):
        tol = max(1e-7, 1e-9 * max(abs(problem.lower[j]), abs(problem.upper[j]), 1.0))
        if x[j] < problem.lower[j] - tol or x[j] > problem.upper[j] + tol:
            issues.append(
                f"column {problem.col_names[j]!r}: value {x[j]!r} outside "
                f"[{problem.lower[j]}, {problem.upper[j]}]"
            )
        if problem.is_binary[j] and abs(x[j] - round(x[j])) > 1e-6:
            issues.append(f"column {problem.col_names[j]!r}: value {x[j]!r} not integral")
    if not np.all(np.isfinite(x)):
        issues.append("solution vector contains non-finite entries")
    return issues


def slack_values(problem: LinearProblem, x: np.ndarray) -> np.ndarray:
    """Distance to the right-hand side, signed so feasible rows are >= 0."""
    activity = problem.row_activity(x)
    out = np.empty(problem.num_rows)
    for i, sense in enumerate(problem.senses):
        if sense == LESS:
            out[i] = problem.b[i] - activity[i]
        elif sense == GREATER:
            out[i] = activity[i] - problem.b[i]
        else:
            out[i] = -abs(activity[i] - problem.b[i])
    return out


def problems_equal(p: LinearProblem, q: LinearProblem) -> bool:
    """Exact structural equality (used by the round-trip tests)."""
    if (p.row_names != q.row_names or p.col_names != q.col_names
            or p.senses != q.senses or p.name != q.name):
        return False
    if not (np.array_equal(p.b, q.b) and np.array_equal(p.c, q.c)
            and np.array_equal(p.is_binary, q.is_binary)):
        return False
    if not (np.array_equal(p.lower, q.lower) and np.array_equal(p.upper, q.upper)):
        return False
    pa, qa = p.A.tocoo(), q.A.tocoo()
    ptrip = sorted(zip(pa.row.tolist(), pa.col.tolist(), pa.data.tolist()))
    qtrip = sorted(zip(qa.row.tolist(), qa.col.tolist(), qa.data.tolist()))
    ptrip = [(r, c, v) for r, c, v in ptrip if v != 0.0]
    qtrip = [(r, c, v) for r, c, v in qtrip if v != 0.0]
    return ptrip == qtrip


def dedupe_rows(problem: LinearProblem) -> LinearProblem:
    """Drop rows that duplicate an earlier row exactly (same coefficients,
    sense and right-hand side)."""
    seen: dict[tuple, int] = {}
    drop: set[int] = set()
    csr = problem.A
    for i in range(problem.num_rows):
        sl = csr[i]
        key = (problem.senses[i], float(problem.b[i]),
               tuple(sl.indices.tolist()), tuple(sl.data.tolist()))
        if key in seen:
            drop.add(i)
        else:
            seen[key] = i
    if not drop:
        return problem
    return problem.without_rows(drop)
