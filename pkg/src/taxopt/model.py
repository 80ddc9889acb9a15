"""Lower a tax code, population and reform recipe into a linear problem.

One coefficient row per taxpayer expresses their total tax as a linear
function of the live variables; fiscal guarantees become constraint
rows or bound tightenings; the objective is a vector over the same
variables.  Everything is deterministic: identical inputs compile to a
byte-identical problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .core import (
    LUMP,
    RATE,
    SCALE,
    RateLayout,
    RuleSchedule,
    TaxCode,
    subkey_text,
)
from .data.population import PERSONAL_INCOME, Population, Taxpayer
from .errors import CompileError, MissingInputError
from .solver.problem import EQUAL, GREATER, LESS, LinearProblem

RATES_MODE = "rates"
SCALES_MODE = "rule_scales"

AT_LEAST = "at_least"
AT_MOST = "at_most"

NET = "net"
GROSS = "gross"

LOSS_AT_MOST = "loss_at_most"
GAIN_AT_MOST = "gain_at_most"
NEUTRAL = "neutral"

TAXPAYER_LEVEL = "taxpayer"
HOUSEHOLD_LEVEL = "household"
GROUP_LEVEL = "group"


# ---------------------------------------------------------------------------
# Selectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Selector:
    """Declarative taxpayer selection shared by constraints and reports."""

    kind: str = "all"
    ids: tuple[str, ...] = ()
    input: str = PERSONAL_INCOME
    minimum: float | None = None
    maximum: float | None = None
    lower_quantile: float | None = None
    upper_quantile: float | None = None
    characteristic: str | None = None
    values: tuple[str, ...] = ()

    def resolve(self, population: Population) -> list[Taxpayer]:
        if self.kind == "all":
            return list(population)
        if self.kind == "ids":
            wanted = set(self.ids)
            return [t for t in population if t.id in wanted]
        if self.kind == "input_range":
            out = []
            for t in population:
                if self.input not in t.inputs:
                    raise MissingInputError(self.input, t.id)
                x = t.inputs[self.input]
                if self.minimum is not None and x < self.minimum:
                    continue
                if self.maximum is not None and x >= self.maximum:
                    continue
                out.append(t)
            return out
        if self.kind == "quantile":
            values = np.array([t.inputs.get(self.input, 0.0) for t in population])
            lo = -np.inf if self.lower_quantile is None else float(
                np.quantile(values, self.lower_quantile))
            hi = np.inf if self.upper_quantile is None else float(
                np.quantile(values, self.upper_quantile))
            return [t for t in population
                    if lo <= t.inputs.get(self.input, 0.0)
                    and (t.inputs.get(self.input, 0.0) < hi or self.upper_quantile == 1.0)]
        if self.kind == "characteristic":
            return [t for t in population
                    if t.characteristics.get(self.characteristic) in self.values]
        raise CompileError(f"unknown selector kind {self.kind!r}")


# ---------------------------------------------------------------------------
# Constraint and objective recipes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IncomeRelative:
    """Bound taxes or net income relative to the current system.

    ``net`` basis constrains net income against ``(1 + epsilon)`` times
    the current net income (safe when current taxes are negative);
    ``gross`` constrains taxes against ``(1 + epsilon)`` times current
    taxes.
    """

    selector: Selector = Selector()
    epsilon: float = 0.0
    direction: str = AT_LEAST
    level: str = TAXPAYER_LEVEL
    basis: str = NET
    label: str | None = None
    kind: str = field(default="income_relative", init=False)


@dataclass(frozen=True)
class IncomeAbsolute:
    """Absolute floor and/or ceiling on net income."""

    selector: Selector = Selector()
    floor: float | None = None
    ceiling: float | None = None
    level: str = TAXPAYER_LEVEL
    label: str | None = None
    kind: str = field(default="income_absolute", init=False)


@dataclass(frozen=True)
class IncomeTight:
    """Taxes must exactly match the current system."""

    selector: Selector = Selector()
    level: str = TAXPAYER_LEVEL
    label: str | None = None
    kind: str = field(default="income_tight", init=False)


@dataclass(frozen=True)
class RateBound:
    """Cap (or floor) marginal rates.

    In rates mode the bound tightens the rate variables directly; in
    rule-scales mode it compiles to one row per merged bracket bounding
    the effective rate of the scaled system.
    """

    upper: float | None = None
    lower: float | None = None
    input: str | None = None  # None applies to every input
    label: str | None = None
    kind: str = field(default="rate_bound", init=False)


@dataclass(frozen=True)
class RateMonotone:
    """Rates must not decrease across a bracket chain."""

    input: str = PERSONAL_INCOME
    label: str | None = None
    kind: str = field(default="rate_monotone", init=False)


@dataclass(frozen=True)
class Budget:
    """Bound the weighted revenue change versus the current system.

    ``neutral`` uses a tolerance band instead of an exact equality: the
    cap defaults to ``1e-4 * sum(w * |current tax|)``.
    """

    direction: str = LOSS_AT_MOST
    cap: float | None = None
    label: str | None = None
    kind: str = field(default="budget", init=False)


@dataclass(frozen=True)
class Mirror:
    """Bound the tax difference between one taxpayer and a mirror."""

    taxpayer: str = ""
    mirror: str = ""
    cap: float = 0.0
    label: str | None = None
    kind: str = field(default="mirror", init=False)


ConstraintSpec = IncomeRelative | IncomeAbsolute | IncomeTight | RateBound \
    | RateMonotone | Budget | Mirror


@dataclass(frozen=True)
class Feasibility:
    kind: str = field(default="feasibility", init=False)


@dataclass(frozen=True)
class MinRevenueLoss:
    kind: str = field(default="min_revenue_loss", init=False)


@dataclass(frozen=True)
class MinComplexity:
    """Minimize the number of active variables via big-M indicators.

    Variables on income-like inputs count double.  ``big_m`` overrides
    the default of each variable's own bound.
    """

    big_m: float | None = None
    income_weight: float = 2.0
    kind: str = field(default="min_complexity", init=False)


@dataclass(frozen=True)
class Lexicographic:
    """Two-stage objective; requires a staged solve (see scenarios)."""

    first: "ObjectiveSpec" = field(default_factory=MinRevenueLoss)
    then: "ObjectiveSpec" = field(default_factory=MinComplexity)
    slack: float = 0.0
    kind: str = field(default="lexicographic", init=False)


ObjectiveSpec = Feasibility | MinRevenueLoss | MinComplexity | Lexicographic

DEFAULT_RATE_BOUNDS = (0.0, 1.0)
LAZY_ROW_THRESHOLD = 1_500
DEFAULT_AMOUNT_BOUNDS = (-10_000.0, 10_000.0)
DEFAULT_SCALE_BOUNDS = (0.0, 1.2)


@dataclass(frozen=True)
class ReformSpec:
    """Declarative recipe: constraints, objective and variable-space edits."""

    name: str = "reform"
    constraints: tuple[ConstraintSpec, ...] = ()
    objective: ObjectiveSpec = field(default_factory=Feasibility)
    frozen_rules: dict[str, dict | None] = field(default_factory=dict)
    support_overrides: dict[str, tuple[float, ...] | None] = field(default_factory=dict)
    merge_dimensions: tuple[str, ...] = ()
    variable_mode: str = RATES_MODE
    rate_bounds: tuple[float, float] = DEFAULT_RATE_BOUNDS
    amount_bounds: tuple[float, float] = DEFAULT_AMOUNT_BOUNDS
    scale_bounds: tuple[float, float] = DEFAULT_SCALE_BOUNDS

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "merge_dimensions", tuple(self.merge_dimensions))
        for lo, hi in (self.rate_bounds, self.amount_bounds, self.scale_bounds):
            if lo > hi:
                raise CompileError(f"bounds ({lo}, {hi}) are not ordered")
        if self.variable_mode not in (RATES_MODE, SCALES_MODE):
            raise CompileError(f"unknown variable mode {self.variable_mode!r}")


def freeze_rule(spec: ReformSpec, rule_id: str, values: dict | None = None) -> ReformSpec:
    """Return a spec that holds one rule at fixed parameter values.

    ``values`` may replace the stored parameters
    (``{"rates": {...}, "lump_sum": {...}}`` per group label); None
    keeps the current ones.
    """
    frozen = dict(spec.frozen_rules)
    frozen[rule_id] = values
    return replace(spec, frozen_rules=frozen)


def merge_groups(spec: ReformSpec, dimension: str) -> ReformSpec:
    """Collapse one group dimension so its variants share variables."""
    if dimension in spec.merge_dimensions:
        return spec
    return replace(spec, merge_dimensions=spec.merge_dimensions + (dimension,))


# ---------------------------------------------------------------------------
# Rows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientRow:
    """One taxpayer's tax function: row . variables + constant."""

    taxpayer_id: str
    coefficients: dict[int, float]
    constant: float
    weight: float


def apply_frozen_values(code: TaxCode, frozen_rules: dict[str, dict | None]) -> TaxCode:
    """Write explicit frozen parameter values into the rule definitions."""
    overrides = {rid: vals for rid, vals in frozen_rules.items() if vals}
    if not overrides:
        return code
    rules = []
    for rule in code.rules:
        if rule.id in overrides:
            vals = overrides[rule.id]
            schedules = {}
            for label, sched in rule.schedules.items():
                rates = vals.get("rates", {}).get(label, sched.rates)
                lump = vals.get("lump_sum", {}).get(label, sched.lump_sum)
                schedules[label] = RuleSchedule(sched.support, tuple(rates), lump)
            rules.append(replace(rule, schedules=schedules))
        else:
            rules.append(rule)
    return replace(code, rules=tuple(rules))


def build_layout(code: TaxCode, spec: ReformSpec) -> RateLayout:
    code = apply_frozen_values(code, spec.frozen_rules)
    unknown = set(spec.frozen_rules) - {r.id for r in code.rules}
    if unknown:
        raise CompileError(f"cannot freeze unknown rules {sorted(unknown)}")
    for dim in spec.merge_dimensions:
        if dim not in {d.name for d in code.dimensions}:
            raise CompileError(f"cannot merge unknown dimension {dim!r}")
    return RateLayout(
        code,
        frozen_ids=frozenset(spec.frozen_rules),
        support_overrides=spec.support_overrides,
        merged_dims=frozenset(spec.merge_dimensions),
        scale_mode=spec.variable_mode == SCALES_MODE,
    )


def build_rows(layout: RateLayout, population: Population) -> list[CoefficientRow]:
    """One coefficient row per taxpayer, in population order."""
    rows = []
    for t in population:
        try:
            coeffs = layout.coefficients(t.inputs, t.characteristics)
            constant = layout.frozen_constant(t.inputs, t.characteristics)
        except MissingInputError as exc:
            raise MissingInputError(exc.input_id, t.id) from exc
        rows.append(CoefficientRow(t.id, coeffs, constant, t.weight))
    return rows


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


@dataclass
class CompiledProblem:
    """A lowered problem plus the context needed to interpret solutions."""

    problem: LinearProblem
    layout: RateLayout
    rows: list[CoefficientRow]
    spec: ReformSpec
    code: TaxCode
    population: Population
    budget_tolerance: float

    def __post_init__(self):
        n = self.layout.num_variables
        data, idx, ptr = [], [], [0]
        for row in self.rows:
            for j in sorted(row.coefficients):
                idx.append(j)
                data.append(row.coefficients[j])
            ptr.append(len(idx))
        self._R = sp.csr_matrix((data, idx, ptr), shape=(len(self.rows), n))
        self._const = np.array([r.constant for r in self.rows])
        self._weights = np.array([r.weight for r in self.rows])
        self._current = np.array([t.current_tax for t in self.population])

    def taxes(self, x: np.ndarray) -> np.ndarray:
        """Per-taxpayer taxes at variable values ``x`` (population order)."""
        return np.asarray(self._R @ x[: self.layout.num_variables]).ravel() + self._const

    def revenue_loss(self, x: np.ndarray) -> float:
        """Weighted revenue loss versus the current system."""
        return float(np.sum(self._weights * (self._current - self.taxes(x))))

    @property
    def variable_slice(self) -> slice:
        return slice(0, self.layout.num_variables)


def default_budget_tolerance(population: Population) -> float:
    return 1e-4 * sum(t.weight * abs(t.current_tax) for t in population)


class _Builder:
    def __init__(self, layout: RateLayout, rows: list[CoefficientRow],
                 population: Population, spec: ReformSpec):
        self.layout = layout
        self.rows = rows
        self.population = population
        self.spec = spec
        self.index_of = {t.id: i for i, t in enumerate(population)}
        n = layout.num_variables
        self.lower = np.empty(n)
        self.upper = np.empty(n)
        currency = {name for name, info in layout.code.inputs.items()
                    if info.unit == "currency"}
        for j, var in enumerate(layout.variables):
            if var.kind == RATE:
                bounds = spec.rate_bounds if var.input in currency else spec.amount_bounds
            elif var.kind == LUMP:
                bounds = spec.amount_bounds
            else:
                bounds = spec.scale_bounds
            self.lower[j], self.upper[j] = bounds
        self.col_names = list(layout.variable_names())
        self.obj = np.zeros(n)
        self.row_data: list[tuple[dict[int, float], str, float, str]] = []
        self.lazy_flags: list[bool] = []

    # -- row helpers --------------------------------------------------------

    def add_row(self, coeffs: dict[int, float], sense: str, rhs: float, name: str,
                lazy: bool = False):
        self.row_data.append((coeffs, sense, rhs, name))
        self.lazy_flags.append(lazy)

    def tax_terms(self, taxpayers: list[Taxpayer]) -> tuple[dict[int, float], float]:
        coeffs: dict[int, float] = {}
        constant = 0.0
        for t in taxpayers:
            row = self.rows[self.index_of[t.id]]
            for j, v in row.coefficients.items():
                coeffs[j] = coeffs.get(j, 0.0) + v
            constant += row.constant
        return coeffs, constant

    def units_for(self, constraint, ci: int) -> list[tuple[str, list[Taxpayer]]]:
        selected = constraint.selector.resolve(self.population)
        if not selected:
            raise CompileError(
                f"constraint #{ci} ({constraint.kind}) selects no taxpayers"
            )
        level = getattr(constraint, "level", TAXPAYER_LEVEL)
        if level == TAXPAYER_LEVEL:
            return [(t.id, [t]) for t in selected]
        if level == HOUSEHOLD_LEVEL:
            seen: dict[str, None] = {}
            for t in selected:
                seen.setdefault(t.household_id)
            return [(f"hh_{hid}", self.population.members(hid)) for hid in seen]
        if level == GROUP_LEVEL:
            return [("group", selected)]
        raise CompileError(f"unknown aggregation level {level!r}")

    @staticmethod
    def base_income(members: list[Taxpayer]) -> float:
        total = 0.0
        for t in members:
            if PERSONAL_INCOME not in t.inputs:
                raise MissingInputError(PERSONAL_INCOME, t.id)
            total += t.inputs[PERSONAL_INCOME]
        return total

    def name_for(self, constraint, ci: int, unit: str) -> str:
        base = constraint.label or f"c{ci}_{constraint.kind}"
        return f"{base}__{unit}"

    # -- constraint lowering --------------------------------------------------

    def income_relative(self, con: IncomeRelative, ci: int):
        if con.epsilon <= -1:
            raise CompileError("epsilon must be greater than -1")
        for unit, members in self.units_for(con, ci):
            coeffs, constant = self.tax_terms(members)
            current = sum(t.current_tax for t in members)
            name = self.name_for(con, ci, unit)
            if con.basis == GROSS:
                rhs = current * (1 + con.epsilon) - constant
                sense = LESS if con.direction == AT_MOST else GREATER
                self.add_row(coeffs, sense, rhs, name, lazy=True)
                continue
            income = self.base_income(members)
            target_net = (income - current) * (1 + con.epsilon)
            # net >= target  <=>  taxes <= income - target
            rhs = income - target_net - constant
            sense = LESS if con.direction == AT_LEAST else GREATER
            self.add_row(coeffs, sense, rhs, name, lazy=True)

    def income_absolute(self, con: IncomeAbsolute, ci: int):
        if con.floor is None and con.ceiling is None:
            raise CompileError("income_absolute needs a floor or a ceiling")
        if con.floor is not None and con.ceiling is not None and con.floor > con.ceiling:
            raise CompileError("income_absolute floor exceeds ceiling")
        for unit, members in self.units_for(con, ci):
            coeffs, constant = self.tax_terms(members)
            income = self.base_income(members)
            name = self.name_for(con, ci, unit)
            if con.floor is not None:
                self.add_row(coeffs, LESS, income - con.floor - constant,
                             name + "__floor", lazy=True)
            if con.ceiling is not None:
                self.add_row(dict(coeffs), GREATER, income - con.ceiling - constant,
                             name + "__ceil", lazy=True)

    def income_tight(self, con: IncomeTight, ci: int):
        for unit, members in self.units_for(con, ci):
            coeffs, constant = self.tax_terms(members)
            current = sum(t.current_tax for t in members)
            self.add_row(coeffs, EQUAL, current - constant,
                         self.name_for(con, ci, unit), lazy=True)

    def rate_bound(self, con: RateBound, ci: int):
        if con.lower is None and con.upper is None:
            raise CompileError("rate_bound needs a bound")
        if self.layout.scale_mode:
            seen: set[tuple] = set()
            for (input_id, subkey), support in sorted(
                    self.layout.rate_supports.items(),
                    key=lambda kv: (kv[0][0], kv[0][1])):
                if con.input is not None and input_id != con.input:
                    continue
                for b in range(support.num_brackets):
                    terms = self.layout.bracket_rate_terms(input_id, subkey, b)
                    coeffs = {self.layout.scale_index(rid): rate
                              for rid, rate in terms.items() if rate != 0.0}
                    if not coeffs:
                        continue
                    key = tuple(sorted(coeffs.items()))
                    if key in seen:  # tied brackets repeat the same row
                        continue
                    seen.add(key)
                    name = f"{con.label or f'c{ci}_cap'}__{input_id}__{b}"
                    if subkey:
                        name += "__" + subkey_text(subkey)
                    if con.upper is not None:
                        self.add_row(coeffs, LESS, con.upper, name)
                    if con.lower is not None:
                        self.add_row(dict(coeffs), GREATER, con.lower, name + "__lo")
            return
        for j, var in enumerate(self.layout.variables):
            if var.kind != RATE:
                continue
            if con.input is not None and var.input != con.input:
                continue
            if con.upper is not None:
                self.upper[j] = min(self.upper[j], con.upper)
            if con.lower is not None:
                self.lower[j] = max(self.lower[j], con.lower)

    def rate_monotone(self, con: RateMonotone, ci: int):
        if self.layout.scale_mode:
            raise CompileError("rate_monotone needs rates mode")
        if con.input in self.layout.tied_inputs:
            return
        for (input_id, subkey), support in sorted(
                self.layout.rate_supports.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            if input_id != con.input:
                continue
            for b in range(support.num_brackets - 1):
                lo_idx = self.layout.rate_index(input_id, subkey, b)
                hi_idx = self.layout.rate_index(input_id, subkey, b + 1)
                name = f"{con.label or f'c{ci}_mono'}__{input_id}__{b}"
                if subkey:
                    name += "__" + subkey_text(subkey)
                self.add_row({lo_idx: 1.0, hi_idx: -1.0}, LESS, 0.0, name)

    def budget(self, con: Budget, ci: int, budget_tolerance: float):
        coeffs: dict[int, float] = {}
        constant = 0.0
        current = 0.0
        for t, row in zip(self.population, self.rows):
            for j, v in row.coefficients.items():
                coeffs[j] = coeffs.get(j, 0.0) + t.weight * v
            constant += t.weight * row.constant
            current += t.weight * t.current_tax
        base = con.label or f"c{ci}_budget"
        if con.direction in (LOSS_AT_MOST, NEUTRAL):
            cap = budget_tolerance if con.direction == NEUTRAL else con.cap
            if cap is None:
                raise CompileError("budget loss cap is required")
            # sum w*(y' - f) <= cap  <=>  sum w*f >= sum w*y' - cap
            self.add_row(dict(coeffs), GREATER, current - cap - constant, base + "__loss")
        if con.direction in (GAIN_AT_MOST, NEUTRAL):
            cap = budget_tolerance if con.direction == NEUTRAL else con.cap
            if cap is None:
                raise CompileError("budget gain cap is required")
            self.add_row(dict(coeffs), LESS, current + cap - constant, base + "__gain")
        if con.direction not in (LOSS_AT_MOST, GAIN_AT_MOST, NEUTRAL):
            raise CompileError(f"unknown budget direction {con.direction!r}")

    def mirror(self, con: Mirror, ci: int):
        for tid in (con.taxpayer, con.mirror):
            if tid not in self.index_of:
                raise CompileError(f"mirror names unknown taxpayer {tid!r}")
        row_a = self.rows[self.index_of[con.taxpayer]]
        row_b = self.rows[self.index_of[con.mirror]]
        coeffs = dict(row_a.coefficients)
        for j, v in row_b.coefficients.items():
            coeffs[j] = coeffs.get(j, 0.0) - v
        coeffs = {j: v for j, v in coeffs.items() if v != 0.0}
        rhs = con.cap - row_a.constant + row_b.constant
        name = con.label or f"c{ci}_mirror"
        self.add_row(coeffs, LESS, rhs, f"{name}__{con.taxpayer}__{con.mirror}")

    # -- objectives -----------------------------------------------------------

    def min_revenue_loss(self):
        # min sum w*(y' - f) == min -sum w*f (constant dropped)
        for t, row in zip(self.population, self.rows):
            for j, v in row.coefficients.items():
                self.obj[j] -= t.weight * v


def compile_reform(spec: ReformSpec, code: TaxCode, population: Population,
                   layout: RateLayout | None = None) -> CompiledProblem:
    """Lower a reform recipe to a standard-form linear problem."""
    if isinstance(spec.objective, Lexicographic):
        raise CompileError(
            "lexicographic objectives need a staged solve; "
            "use scenarios.two_step_reform or stage the spec manually"
        )
    working_code = apply_frozen_values(code, spec.frozen_rules)
    layout = layout or build_layout(code, spec)
    rows = build_rows(layout, population)
    budget_tolerance = default_budget_tolerance(population)
    builder = _Builder(layout, rows, population, spec)

    for ci, con in enumerate(spec.constraints):
        if isinstance(con, IncomeRelative):
            builder.income_relative(con, ci)
        elif isinstance(con, IncomeAbsolute):
            builder.income_absolute(con, ci)
        elif isinstance(con, IncomeTight):
            builder.income_tight(con, ci)
        elif isinstance(con, RateBound):
            builder.rate_bound(con, ci)
        elif isinstance(con, RateMonotone):
            builder.rate_monotone(con, ci)
        elif isinstance(con, Budget):
            builder.budget(con, ci, budget_tolerance)
        elif isinstance(con, Mirror):
            builder.mirror(con, ci)
        else:
            raise CompileError(f"unknown constraint spec {con!r}")

    if isinstance(spec.objective, MinRevenueLoss):
        builder.min_revenue_loss()

    n = layout.num_variables
    col_names = list(builder.col_names)
    lower = builder.lower
    upper = builder.upper
    obj = builder.obj
    binaries = np.zeros(n, dtype=bool)
    links: list[tuple[int, int]] = []

    if isinstance(spec.objective, MinComplexity):
        candidates = [j for j in range(n) if upper[j] > lower[j]]
        income_like = {name for name, info in layout.code.inputs.items() if info.income_like}
        z_cols = []
        for j in candidates:
            var = layout.variables[j]
            if var.kind == SCALE:
                rule = layout.code.rule_by_id(var.rule_id)
                heavy = layout.code.is_income_dependent(rule)
            else:
                heavy = var.kind == RATE and var.input in income_like
            weight = spec.objective.income_weight if heavy else 1.0
            big_m_pos = spec.objective.big_m or (upper[j] if np.isfinite(upper[j]) else 10_000.0)
            big_m_neg = spec.objective.big_m or (-lower[j] if np.isfinite(lower[j]) else 10_000.0)
            z = len(col_names)
            col_names.append(f"use__{layout.variables[j].name}")
            z_cols.append((j, z, weight, big_m_pos, big_m_neg))
        extra = len(z_cols)
        lower = np.concatenate([lower, np.zeros(extra)])
        upper = np.concatenate([upper, np.ones(extra)])
        obj = np.concatenate([obj, np.zeros(extra)])
        binaries = np.concatenate([binaries, np.ones(extra, dtype=bool)])
        for j, z, weight, m_pos, m_neg in z_cols:
            obj[z] = weight
            if np.isfinite(m_pos) and m_pos > 0:
                builder.add_row({j: 1.0, z: -m_pos}, LESS, 0.0,
                                f"link_up__{layout.variables[j].name}")
            if lower[j] < 0 and np.isfinite(m_neg) and m_neg > 0:
                builder.add_row({j: -1.0, z: -m_neg}, LESS, 0.0,
                                f"link_dn__{layout.variables[j].name}")
            links.append((j, z))

    total_cols = len(col_names)
    data, cols_idx, ptr = [], [], [0]
    senses, rhs, row_names = [], [], []
    for coeffs, sense, b, name in builder.row_data:
        for j in sorted(coeffs):
            if coeffs[j] != 0.0:
                cols_idx.append(j)
                data.append(coeffs[j])
        ptr.append(len(cols_idx))
        senses.append(sense)
        rhs.append(b)
        row_names.append(name)
    A = sp.csr_matrix((data, cols_idx, ptr), shape=(len(senses), total_cols))

    meta: dict = {"indicator_links": links}
    lazy_rows = [i for i, flag in enumerate(builder.lazy_flags) if flag]
    if len(lazy_rows) > LAZY_ROW_THRESHOLD:
        # Guarantee rows dominate large problems; activating them only as
        # an interim optimum violates them keeps node solves small.
        meta["lazy_rows"] = lazy_rows

    problem = LinearProblem(
        c=obj,
        A=A,
        senses=senses,
        b=np.array(rhs),
        lower=lower,
        upper=upper,
        is_binary=binaries,
        row_names=row_names,
        col_names=col_names,
        name=spec.name,
        meta=meta,
    )
    return CompiledProblem(
        problem=problem,
        layout=layout,
        rows=rows,
        spec=spec,
        code=working_code,
        population=population,
        budget_tolerance=budget_tolerance,
    )


def cleanup_indicators(compiled: CompiledProblem, x: np.ndarray,
                       threshold: float = 1e-7) -> np.ndarray:
    """Zero variables whose indicator is off, clearing solver round-off."""
    out = x.copy()
    for j, z in compiled.problem.meta.get("indicator_links", []):
        if out[z] < 0.5 and abs(out[j]) <= threshold:
            out[j] = 0.0
    return out
