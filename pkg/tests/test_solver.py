import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import linprog

from taxopt.solver import (
    EQUAL,
    GREATER,
    INFEASIBLE,
    LESS,
    OPTIMAL,
    UNBOUNDED,
    LinearProblem,
    audit_solution,
    solve_lp,
    solve_milp,
)

from oracles import brute_force_optimum


def make_problem(c, A, senses, b, lower=None, upper=None, binary=None, name="p"):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    return LinearProblem(
        c=np.asarray(c, dtype=float),
        A=sp.csr_matrix(A),
        senses=list(senses),
        b=np.asarray(b, dtype=float),
        lower=np.zeros(n) if lower is None else np.asarray(lower, dtype=float),
        upper=np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float),
        is_binary=np.zeros(n, dtype=bool) if binary is None else np.asarray(binary, dtype=bool),
        row_names=[f"row{i}" for i in range(m)],
        col_names=[f"x{j}" for j in range(n)],
        name=name,
    )


def test_single_equation_recovers_rate():
    p = make_problem([0.0], [[25_000.0]], [EQUAL], [2_500.0], upper=[1.0])
    sol = solve_lp(p)
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(0.1, abs=1e-9)
    assert audit_solution(p, sol.x) == []


def test_contradictory_bounds_infeasible():
    p = make_problem([0.0], [[1.0], [1.0]], [GREATER, LESS], [0.5, 0.4], upper=[1.0])
    sol = solve_lp(p)
    assert sol.status == INFEASIBLE
    assert sol.conflict_rows == ["row0", "row1"]


def test_unbounded_detected():
    p = make_problem([-1.0], [[0.0]], [LESS], [10.0])
    sol = solve_lp(p)
    assert sol.status == UNBOUNDED


def test_basic_two_variable():
    # max x + y st x + 2y <= 4, 3x + y <= 6 -> min -x - y
    p = make_problem([-1.0, -1.0], [[1.0, 2.0], [3.0, 1.0]], [LESS, LESS], [4.0, 6.0])
    sol = solve_lp(p)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-(8 / 5 + 6 / 5), abs=1e-8)


def test_equality_rows_with_negative_rhs():
    p = make_problem([1.0, 1.0], [[1.0, -1.0]], [EQUAL], [-3.0], upper=[10.0, 10.0])
    sol = solve_lp(p)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(3.0, abs=1e-9)


def test_upper_bounded_variable_flip():
    # Optimum forces x to its upper bound via a bound flip.
    p = make_problem([-1.0, 0.0], [[1.0, 1.0]], [LESS], [10.0], upper=[2.0, np.inf])
    sol = solve_lp(p)
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(2.0)


def test_free_variable():
    p = make_problem([1.0], [[1.0]], [GREATER], [-5.0],
                     lower=[-np.inf], upper=[np.inf])
    sol = solve_lp(p)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-5.0, abs=1e-9)


def test_degenerate_recovery_system():
    # 100 identical-structure equality rows, 5 unknowns: heavy degeneracy.
    rng = np.random.default_rng(7)
    cutoffs = [25_000.0, 50_000.0, 75_000.0, 100_000.0]
    rates = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    incomes = rng.uniform(1_000, 120_000, size=100)
    rows = []
    for x in incomes:
        lo = 0.0
        row = []
        for hi in cutoffs:
            row.append(min(max(x - lo, 0.0), hi - lo))
            lo = hi
        row.append(max(x - lo, 0.0))
        rows.append(row)
    A = np.array(rows)
    b = A @ rates
    p = make_problem(np.zeros(5), A, [EQUAL] * 100, b, upper=np.ones(5))
    sol = solve_lp(p)
    assert sol.status == OPTIMAL
    np.testing.assert_allclose(sol.x, rates, atol=1e-6)


def _random_instance(rng):
    n = int(rng.integers(1, 4))
    m = int(rng.integers(1, 7))
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    senses = [rng.choice([LESS, GREATER, EQUAL] if rng.random() < 0.3 else [LESS, GREATER])
              for _ in range(m)]
    x_feas = rng.uniform(0, 2, size=n)
    b = A @ x_feas + rng.uniform(-1, 1, size=m)
    for i, s in enumerate(senses):
        if s == EQUAL:
            b[i] = A[i] @ x_feas
    c = rng.integers(-5, 6, size=n).astype(float)
    lower = np.zeros(n)
    upper = np.full(n, 4.0)
    return make_problem(c, A, senses, b, lower=lower, upper=upper)


def test_vertex_enumeration_oracle_battery():
    rng = np.random.default_rng(42)
    checked = 0
    for _ in range(250):
        p = _random_instance(rng)
        expected = brute_force_optimum(p)
        sol = solve_lp(p)
        if expected is None:
            assert sol.status == INFEASIBLE
            continue
        assert sol.status == OPTIMAL, f"expected optimal, got {sol.status}"
        assert sol.objective == pytest.approx(expected, abs=1e-8)
        assert audit_solution(p, sol.x) == []
        checked += 1
    assert checked > 100


def test_against_scipy_linprog_battery():
    rng = np.random.default_rng(123)
    for _ in range(120):
        n = int(rng.integers(2, 8))
        m = int(rng.integers(1, 12))
        A = rng.normal(size=(m, n)).round(2)
        senses = [str(rng.choice([LESS, GREATER, EQUAL])) for _ in range(m)]
        x_feas = rng.uniform(0, 3, size=n)
        b = A @ x_feas
        c = rng.normal(size=n).round(2)
        lower = np.zeros(n)
        upper = np.full(n, 10.0)
        p = make_problem(c, A, senses, b, lower=lower, upper=upper)
        a_ub, b_ub, a_eq, b_eq = [], [], [], []
        for i, s in enumerate(senses):
            if s == LESS:
                a_ub.append(A[i]); b_ub.append(b[i])
            elif s == GREATER:
                a_ub.append(-A[i]); b_ub.append(-b[i])
            else:
                a_eq.append(A[i]); b_eq.append(b[i])
        ref = linprog(c, A_ub=np.array(a_ub) if a_ub else None,
                      b_ub=np.array(b_ub) if b_ub else None,
                      A_eq=np.array(a_eq) if a_eq else None,
                      b_eq=np.array(b_eq) if b_eq else None,
                      bounds=[(0, 10)] * n, method="highs")
        sol = solve_lp(p)
        assert ref.status in (0, 2)
        if ref.status == 2:
            assert sol.status == INFEASIBLE
        else:
            assert sol.status == OPTIMAL
            assert sol.objective == pytest.approx(ref.fun, abs=1e-6)
            assert audit_solution(p, sol.x) == []


def test_determinism():
    rng = np.random.default_rng(5)
    p = _random_instance(rng)
    first = solve_lp(p)
    second = solve_lp(p)
    assert first.status == second.status
    if first.status == OPTIMAL:
        assert np.array_equal(first.x, second.x)


def test_milp_forced_indicator():
    # minimize z1 + z2 st a <= z1, a >= 0.3
    p = make_problem(
        [0.0, 1.0, 1.0],
        [[1.0, -1.0, 0.0], [1.0, 0.0, 0.0]],
        [LESS, GREATER],
        [0.0, 0.3],
        upper=[1.0, 1.0, 1.0],
        binary=[False, True, True],
    )
    sol = solve_milp(p)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(1.0, abs=1e-9)
    assert sol.x[1] == pytest.approx(1.0)
    assert sol.x[2] == pytest.approx(0.0)


def test_milp_continuous_passthrough():
    p = make_problem([-1.0, -1.0], [[1.0, 2.0], [3.0, 1.0]], [LESS, LESS], [4.0, 6.0])
    assert solve_milp(p).objective == pytest.approx(solve_lp(p).objective)


def test_milp_knapsack():
    # max 5a + 4b + 3c st 2a + 3b + c <= 5, binaries
    p = make_problem(
        [-5.0, -4.0, -3.0],
        [[2.0, 3.0, 1.0]],
        [LESS],
        [5.0],
        upper=[1.0, 1.0, 1.0],
        binary=[True, True, True],
    )
    sol = solve_milp(p)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-9.0)  # a = b = 1 fits: 2 + 3 <= 5
    assert sol.bound is not None and sol.objective >= sol.bound - 1e-6


def test_milp_vs_bruteforce_battery():
    rng = np.random.default_rng(99)
    for _ in range(40):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 4))
        A = rng.integers(-2, 4, size=(m, n)).astype(float)
        b = rng.integers(1, 6, size=m).astype(float)
        c = rng.integers(-4, 5, size=n).astype(float)
        p = make_problem(c, A, [LESS] * m, b, upper=np.ones(n),
                         binary=[True] * n)
        best = None
        for bits in range(2 ** n):
            x = np.array([(bits >> k) & 1 for k in range(n)], dtype=float)
            if np.all(A @ x <= b + 1e-9):
                val = float(c @ x)
                best = val if best is None or val < best else best
        sol = solve_milp(p)
        if best is None:
            assert sol.status == INFEASIBLE
        else:
            assert sol.status == OPTIMAL
            assert sol.objective == pytest.approx(best, abs=1e-7)
