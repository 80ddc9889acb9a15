"""Independent reference computations used across the test suite.

Everything here deliberately avoids the production solve paths: the
vertex enumerator works from first principles (active-set
intersections), the brute-force evaluators walk rule definitions
directly.
"""

from __future__ import annotations

import itertools

import numpy as np

from taxopt.solver.problem import EQUAL, GREATER, LESS, LinearProblem


def enumerate_vertices(problem: LinearProblem, tol: float = 1e-7) -> np.ndarray:
    """All vertices of the feasible polytope of a small problem.

    A vertex makes n constraints active among {rows as equalities,
    variable bounds}.  Intended for n <= 3 and a handful of rows.
    """
    n = problem.num_cols
    A = problem.A.toarray()
    planes = []  # (normal, offset)
    for i in range(problem.num_rows):
        planes.append((A[i], problem.b[i]))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(problem.lower[j]):
            planes.append((e.copy(), problem.lower[j]))
        if np.isfinite(problem.upper[j]):
            planes.append((e.copy(), problem.upper[j]))
    vertices = []
    for combo in itertools.combinations(range(len(planes)), n):
        N = np.array([planes[k][0] for k in combo])
        d = np.array([planes[k][1] for k in combo])
        if abs(np.linalg.det(N)) < 1e-10:
            continue
        x = np.linalg.solve(N, d)
        if _feasible(problem, x, tol):
            vertices.append(x)
    return np.array(vertices)


def _feasible(problem: LinearProblem, x: np.ndarray, tol: float) -> bool:
    if np.any(x < problem.lower - tol) or np.any(x > problem.upper + tol):
        return False
    activity = problem.A.toarray() @ x
    for i, sense in enumerate(problem.senses):
        gap = activity[i] - problem.b[i]
        if sense == LESS and gap > tol:
            return False
        if sense == GREATER and gap < -tol:
            return False
        if sense == EQUAL and abs(gap) > tol:
            return False
    return True


def brute_force_optimum(problem: LinearProblem) -> float | None:
    """Minimal objective over enumerated vertices; None when infeasible."""
    vertices = enumerate_vertices(problem)
    if len(vertices) == 0:
        return None
    return float(np.min(vertices @ problem.c))
