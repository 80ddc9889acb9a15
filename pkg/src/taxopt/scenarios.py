"""Executable reform recipes: recovery, reform archetypes, staged solves
and cap sweeps.

Every optimal outcome is re-audited row by row outside the solver; a
failed audit is a bug, not a result, and raises.  Infeasibility is a
first-class outcome carrying the conflicting guarantee names.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field, replace

import numpy as np

from . import model as m
from .core import RateSet, TaxCode, subkey_text
from .data.population import Population
from .errors import SolverError
from .solver import OPTIMAL, audit_solution, solve_lp, solve_milp
from .solver.problem import Solution

ACTIVE_THRESHOLD = 1e-7


@dataclass
class ScenarioResult:
    """A solved recipe plus everything needed to report it."""

    status: str
    compiled: m.CompiledProblem
    solution: Solution
    x: np.ndarray | None = None
    rates: RateSet | None = None
    revenue_loss: float | None = None
    census: list[dict] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def conflicts(self) -> list[str]:
        return self.solution.conflict_rows

    def active_rule_count(self) -> int:
        return sum(1 for row in self.census if row["active"])


def rule_census(compiled: m.CompiledProblem, x: np.ndarray | None) -> list[dict]:
    """Table-style census: one row per rule (or live parameter block).

    Frozen rules stay active at their stored parameters.  In rule-scale
    mode activity is the scale value; in rates mode live structure is
    censused per merged parameter block because individual rules are no
    longer distinguishable after a reform.
    """
    layout = compiled.layout
    code = layout.code
    rows = []
    for rule in layout.frozen_rules:
        rows.append({
            "name": rule.id,
            "topic": rule.topic or rule.id,
            "kind": "frozen",
            "active": any(any(r != 0.0 for r in s.rates) or s.lump_sum != 0.0
                          for s in rule.schedules.values()),
            "income_dependent": code.is_income_dependent(rule),
        })
    if x is None:
        for rule in layout.live_rules:
            rows.append({
                "name": rule.id,
                "topic": rule.topic or rule.id,
                "kind": rule.kind,
                "active": any(any(r != 0.0 for r in s.rates) or s.lump_sum != 0.0
                              for s in rule.schedules.values()),
                "income_dependent": code.is_income_dependent(rule),
            })
        return rows
    if layout.scale_mode:
        for rule in layout.live_rules:
            scale = float(x[layout.scale_index(rule.id)])
            rows.append({
                "name": rule.id,
                "topic": rule.topic or rule.id,
                "kind": "scaled",
                "active": abs(scale) > ACTIVE_THRESHOLD,
                "income_dependent": code.is_income_dependent(rule) and
                abs(scale) > ACTIVE_THRESHOLD,
                "scale": scale,
            })
        return rows
    income_like = {name for name, info in code.inputs.items() if info.income_like}
    for (input_id, subkey), support in sorted(layout.rate_supports.items()):
        if input_id in layout.tied_inputs:
            values = [float(x[layout.rate_index(input_id, subkey, 0)])]
        else:
            values = [float(x[layout.rate_index(input_id, subkey, b)])
                      for b in range(support.num_brackets)]
        active = any(abs(v) > ACTIVE_THRESHOLD for v in values)
        rows.append({
            "name": f"rates:{input_id}[{subkey_text(subkey)}]",
            "topic": input_id,
            "kind": "rates",
            "active": active,
            "income_dependent": active and input_id in income_like,
        })
    for var in layout.variables:
        if var.kind == "lump":
            value = float(x[layout.lump_index(var.rule_id, var.label)])
            rows.append({
                "name": f"lump:{var.rule_id}[{var.label}]",
                "topic": code.rule_by_id(var.rule_id).topic or var.rule_id,
                "kind": "lump",
                "active": abs(value) > ACTIVE_THRESHOLD,
                "income_dependent": False,
            })
    return rows


def _solve_compiled(compiled: m.CompiledProblem, node_limit: int = 100_000) -> Solution:
    if np.any(compiled.problem.is_binary):
        return solve_milp(compiled.problem, node_limit=node_limit)
    return solve_lp(compiled.problem)


def solve_reform(spec: m.ReformSpec, code: TaxCode, population: Population,
                 node_limit: int = 100_000) -> ScenarioResult:
    """Compile and solve one recipe (staging lexicographic objectives)."""
    if isinstance(spec.objective, m.Lexicographic):
        return _solve_lexicographic(spec, code, population, node_limit)
    compiled = m.compile_reform(spec, code, population)
    solution = _solve_compiled(compiled, node_limit)
    return _finish(compiled, solution)


def _finish(compiled: m.CompiledProblem, solution: Solution) -> ScenarioResult:
    if solution.status != OPTIMAL:
        return ScenarioResult(status=solution.status, compiled=compiled,
                              solution=solution,
                              census=rule_census(compiled, None))
    x = m.cleanup_indicators(compiled, solution.x)
    issues = audit_solution(compiled.problem, x)
    if issues:
        raise SolverError(
            "solver returned an optimal point that fails the independent audit: "
            + "; ".join(issues[:5])
        )
    rates = compiled.layout.to_rate_set(x)
    return ScenarioResult(
        status=OPTIMAL,
        compiled=compiled,
        solution=solution,
        x=x,
        rates=rates,
        revenue_loss=compiled.revenue_loss(x),
        census=rule_census(compiled, x),
    )


def _solve_lexicographic(spec: m.ReformSpec, code: TaxCode, population: Population,
                         node_limit: int) -> ScenarioResult:
    objective: m.Lexicographic = spec.objective
    stage1 = replace(spec, name=spec.name + "_stage1", objective=objective.first)
    first = solve_reform(stage1, code, population, node_limit)
    if not first.is_optimal:
        return first
    budget_guard = m.Budget(direction=m.LOSS_AT_MOST,
                            cap=first.revenue_loss + objective.slack,
                            label="stage1_guard")
    stage2 = replace(
        spec,
        name=spec.name + "_stage2",
        objective=objective.then,
        constraints=spec.constraints + (budget_guard,),
    )
    compiled = m.compile_reform(stage2, code, population)
    _seed_lazy_rows(compiled, first)
    second = _finish(compiled, _solve_compiled(compiled, node_limit))
    second.diagnostics["stage1"] = first
    return second


def _seed_lazy_rows(compiled: m.CompiledProblem, previous: ScenarioResult) -> None:
    """Pre-activate the guarantee rows that bound the previous stage."""
    problem = compiled.problem
    if "lazy_rows" not in problem.meta or previous.x is None:
        return
    source = previous.compiled.problem
    activity = source.row_activity(previous.x)
    name_to_index = {name: i for i, name in enumerate(problem.row_names)}
    seed = []
    for i in source.meta.get("lazy_rows", ()):
        tol = 10.0 * max(1e-4, 1e-6 * abs(source.b[i]))
        if abs(activity[i] - source.b[i]) <= tol:
            j = name_to_index.get(source.row_names[i])
            if j is not None:
                seed.append(j)
    problem.meta["lazy_seed"] = tuple(seed)


def two_step_reform(code: TaxCode, population: Population, cap: float = 0.75,
                    slack: float = 1e8, epsilon: float = -0.05,
                    node_limit: int = 100_000) -> tuple[ScenarioResult, ScenarioResult]:
    """Minimize revenue loss under a rate cap, then simplify within slack."""
    if slack < 0:
        raise ValueError("slack must be non-negative")
    spec = m.ReformSpec(
        name=f"two_step_cap{cap:g}",
        constraints=(
            m.IncomeRelative(selector=m.Selector(kind="all"), epsilon=epsilon,
                             direction=m.AT_LEAST, basis=m.NET,
                             level=m.HOUSEHOLD_LEVEL, label="household_guarantee"),
            m.RateBound(upper=cap, label="pressure_cap"),
        ),
        objective=m.Lexicographic(first=m.MinRevenueLoss(),
                                  then=m.MinComplexity(income_weight=2.0),
                                  slack=slack),
        variable_mode=m.SCALES_MODE,
    )
    second = solve_reform(spec, code, population, node_limit)
    first = second.diagnostics.get("stage1", second)
    return first, second


def recover(code: TaxCode, population: Population) -> ScenarioResult:
    """Tight income guarantees; with full column rank this reproduces the
    generating rates exactly.  Rank deficiency is reported as a
    diagnostic, not an error."""
    spec = m.ReformSpec(
        name=f"recover_{code.name}",
        constraints=(m.IncomeTight(selector=m.Selector(kind="all"), label="tight"),),
        objective=m.Feasibility(),
    )
    compiled = m.compile_reform(spec, code, population)
    result = _finish(compiled, _solve_compiled(compiled))
    n = compiled.layout.num_variables
    if len(population) and n:
        dense = compiled.problem.A.toarray()[:, :n]
        rank = int(np.linalg.matrix_rank(dense))
        result.diagnostics["column_rank"] = rank
        result.diagnostics["rank_deficient"] = rank < n
    return result


def reform_targeted_tax_break(code: TaxCode, population: Population,
                              epsilon: float = 0.05, delta: float = -0.10,
                              income_input: str = m.PERSONAL_INCOME) -> ScenarioResult:
    """Middle half gains, outer quartiles roughly held, cheapest such reform."""
    outer_low = m.Selector(kind="quantile", input=income_input, upper_quantile=0.25)
    middle = m.Selector(kind="quantile", input=income_input,
                        lower_quantile=0.25, upper_quantile=0.75)
    outer_high = m.Selector(kind="quantile", input=income_input, lower_quantile=0.75)
    spec = m.ReformSpec(
        name="targeted_tax_break",
        constraints=(
            m.IncomeRelative(selector=outer_low, epsilon=-epsilon,
                             direction=m.AT_LEAST, basis=m.NET, label="hold_bottom"),
            m.IncomeRelative(selector=outer_high, epsilon=-epsilon,
                             direction=m.AT_LEAST, basis=m.NET, label="hold_top"),
            m.IncomeRelative(selector=middle, epsilon=-delta,
                             direction=m.AT_LEAST, basis=m.NET, label="lift_middle"),
        ),
        objective=m.MinRevenueLoss(),
    )
    return solve_reform(spec, code, population)


def reform_redistribution(code: TaxCode, population: Population,
                          epsilon: float = 0.05, delta: float = -0.10,
                          gamma: float = 0.15, budget_cap: float = 0.0,
                          income_input: str = m.PERSONAL_INCOME) -> ScenarioResult:
    """Middle half gains, the top quartile pays, budget loss capped."""
    bottom = m.Selector(kind="quantile", input=income_input, upper_quantile=0.25)
    middle = m.Selector(kind="quantile", input=income_input,
                        lower_quantile=0.25, upper_quantile=0.75)
    top = m.Selector(kind="quantile", input=income_input, lower_quantile=0.75)
    spec = m.ReformSpec(
        name="redistribution",
        constraints=(
            m.IncomeRelative(selector=bottom, epsilon=-epsilon, direction=m.AT_LEAST,
                             basis=m.NET, label="hold_bottom"),
            m.IncomeRelative(selector=middle, epsilon=-delta, direction=m.AT_LEAST,
                             basis=m.NET, label="lift_middle"),
            m.IncomeRelative(selector=top, epsilon=-gamma, direction=m.AT_LEAST,
                             basis=m.NET, label="top_floor"),
            m.Budget(direction=m.LOSS_AT_MOST, cap=budget_cap, label="budget_cap"),
        ),
        objective=m.Feasibility(),
    )
    return solve_reform(spec, code, population)


def reform_marginal_cap(code: TaxCode, population: Population, cap: float = 0.5,
                        epsilon: float = 0.05, budget_cap: float | None = None) -> ScenarioResult:
    """Cap every rate while keeping income fluctuations within epsilon."""
    constraints: list[m.ConstraintSpec] = [
        m.IncomeRelative(selector=m.Selector(kind="all"), epsilon=-epsilon,
                         direction=m.AT_LEAST, basis=m.NET, label="income_floor"),
        m.RateBound(upper=cap, label="pressure_cap"),
    ]
    if budget_cap is not None:
        constraints.append(m.Budget(direction=m.LOSS_AT_MOST, cap=budget_cap,
                                    label="budget_cap"))
    spec = m.ReformSpec(
        name=f"marginal_cap_{cap:g}",
        constraints=tuple(constraints),
        objective=m.MinRevenueLoss(),
    )
    return solve_reform(spec, code, population)


def reform_complexity(code: TaxCode, population: Population, epsilon: float = 0.05,
                      budget_cap: float | None = None,
                      node_limit: int = 100_000) -> ScenarioResult:
    """Fewest active parameters within loose income guarantees."""
    constraints: list[m.ConstraintSpec] = [
        m.IncomeRelative(selector=m.Selector(kind="all"), epsilon=-epsilon,
                         direction=m.AT_LEAST, basis=m.NET, label="income_floor"),
    ]
    if budget_cap is not None:
        constraints.append(m.Budget(direction=m.LOSS_AT_MOST, cap=budget_cap,
                                    label="budget_cap"))
    spec = m.ReformSpec(
        name="complexity",
        constraints=tuple(constraints),
        objective=m.MinComplexity(income_weight=2.0),
    )
    return solve_reform(spec, code, population, node_limit)


@dataclass
class FrontierEntry:
    cap: float
    status: str
    revenue_loss: float | None
    active_rules: int | None
    conflicts: list[str] = field(default_factory=list)


def cap_sweep_builder(spec: m.ReformSpec):
    """Per-cap variants of a recipe: its first rate bound takes the cap."""

    def build(cap: float) -> m.ReformSpec:
        bounds = [c for c in spec.constraints if isinstance(c, m.RateBound)]
        rest = tuple(c for c in spec.constraints if not isinstance(c, m.RateBound))
        capped = replace(bounds[0], upper=cap) if bounds else m.RateBound(
            upper=cap, label="pressure_cap")
        return replace(spec, name=f"{spec.name}_cap{cap:g}",
                       constraints=rest + (capped,))

    return build


def sweep_frontier(code: TaxCode, population: Population, caps,
                   spec_builder=None, max_workers: int | None = None) -> list[FrontierEntry]:
    """Minimal loss per rate cap; infeasible caps are marked, not fatal.

    Losses must be non-increasing in the cap (the feasible sets nest);
    a violation beyond tolerance means a solver defect and raises.
    """
    caps = [float(c) for c in caps]
    if caps != sorted(caps):
        raise ValueError("caps must be sorted ascending")

    def build(cap: float) -> m.ReformSpec:
        if spec_builder is not None:
            return spec_builder(cap)
        return m.ReformSpec(
            name=f"frontier_cap{cap:g}",
            constraints=(
                m.IncomeRelative(selector=m.Selector(kind="all"), epsilon=-0.05,
                                 direction=m.AT_LEAST, basis=m.NET,
                                 level=m.HOUSEHOLD_LEVEL, label="household_guarantee"),
                m.RateBound(upper=cap, label="pressure_cap"),
            ),
            objective=m.MinRevenueLoss(),
            variable_mode=m.SCALES_MODE,
        )

    def run(cap: float) -> FrontierEntry:
        result = solve_reform(build(cap), code, population)
        if result.is_optimal:
            return FrontierEntry(cap=cap, status=result.status,
                                 revenue_loss=result.revenue_loss,
                                 active_rules=result.active_rule_count())
        return FrontierEntry(cap=cap, status=result.status, revenue_loss=None,
                             active_rules=None, conflicts=result.conflicts)

    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as pool:
        entries = list(pool.map(run, caps))

    feasible = [e for e in entries if e.revenue_loss is not None]
    tolerance = 1e-6 * max(1.0, max((abs(e.revenue_loss) for e in feasible), default=1.0))
    for earlier, later in zip(feasible, feasible[1:]):
        if later.revenue_loss > earlier.revenue_loss + tolerance:
            raise SolverError(
                f"frontier not monotone: loss {later.revenue_loss} at cap {later.cap} "
                f"exceeds {earlier.revenue_loss} at cap {earlier.cap}"
            )
    return entries
