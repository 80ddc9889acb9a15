"""Built-in example systems: codes, populations and reform recipes.

Four bundled scenarios of increasing size back the demos, the test
suite and the service's one-click catalogue: a single five-bracket
rule; brackets plus two benefits; a multi-group system with household
benefits and a self-employment credit; and a synthetic population at
real-world scale with a dozen interacting rules.
"""

from __future__ import annotations

import numpy as np

from . import model as m
from .core import (
    BENEFIT,
    BRACKET,
    TAX_CREDIT,
    GroupDimension,
    InputInfo,
    RuleSchedule,
    Support,
    TaxCode,
    TaxRule,
)
from .data.population import HOUSEHOLD_INCOME, PERSONAL_INCOME, Population, Taxpayer
from .data.synth import SyntheticPopulationConfig, generate_population

CHILD_CUTOFFS = tuple(float(k) for k in range(1, 101))

_INCOME_INPUTS = {
    PERSONAL_INCOME: InputInfo("currency", income_like=True),
    HOUSEHOLD_INCOME: InputInfo("currency", income_like=True),
}


def _sched(cutoffs, rates, lump=0.0, input_id=PERSONAL_INCOME):
    return RuleSchedule(Support(input_id, tuple(cutoffs)), tuple(rates), lump)


def _stamp(code: TaxCode, taxpayers: list[Taxpayer]) -> Population:
    stamped = [
        Taxpayer(t.id, t.inputs, t.characteristics, t.weight, t.household_id,
                 code.total_tax(t.inputs, t.characteristics))
        for t in taxpayers
    ]
    return Population(tuple(stamped), provenance={"code": code.name})


# ---------------------------------------------------------------------------
# Example 1: one progressive bracket rule, one group
# ---------------------------------------------------------------------------


def example1_code() -> TaxCode:
    rule = TaxRule(
        id="income_tax",
        kind=BRACKET,
        input=PERSONAL_INCOME,
        topic="income_brackets",
        schedules={"all": _sched((25_000, 50_000, 75_000, 100_000),
                                 (0.10, 0.20, 0.30, 0.40, 0.50))},
    )
    return TaxCode(
        name="example1",
        rules=(rule,),
        inputs={PERSONAL_INCOME: InputInfo("currency", income_like=True)},
    )


def example1_population() -> Population:
    code = example1_code()
    rng = np.random.default_rng(20_240_601)
    incomes = [52_000.0, 120_000.0] + [
        float(round(x)) for x in rng.uniform(2_000, 120_000, size=98)
    ]
    taxpayers = [
        Taxpayer(
            id="jude" if i == 0 else "laila" if i == 1 else f"t{i:03d}",
            inputs={PERSONAL_INCOME: x},
            characteristics={},
            weight=1.0,
            household_id=f"hh{i:03d}",
            current_tax=0.0,
        )
        for i, x in enumerate(incomes)
    ]
    return _stamp(code, taxpayers)


def example1_recovery_spec() -> m.ReformSpec:
    return m.ReformSpec(
        name="example1_recovery",
        constraints=(m.IncomeTight(selector=m.Selector(kind="all"), label="tight"),),
        objective=m.Feasibility(),
    )


def _support_guarantees(threshold=70_000.0, gain=0.05, max_loss=0.10):
    below = m.IncomeRelative(
        selector=m.Selector(kind="input_range", input=PERSONAL_INCOME, maximum=threshold),
        epsilon=gain, direction=m.AT_LEAST, basis=m.NET, label="gain_below_70k",
    )
    above = m.IncomeRelative(
        selector=m.Selector(kind="input_range", input=PERSONAL_INCOME, minimum=threshold),
        epsilon=-max_loss, direction=m.AT_LEAST, basis=m.NET, label="floor_above_70k",
    )
    return below, above


def example1_reform1_spec() -> m.ReformSpec:
    below, above = _support_guarantees()
    return m.ReformSpec(
        name="example1_reform1",
        constraints=(below, above,
                     m.RateMonotone(input=PERSONAL_INCOME, label="progressive"),
                     m.Budget(direction=m.NEUTRAL, label="budget_neutral")),
        objective=m.Feasibility(),
    )


def example1_reform2_spec(cap: float = 0.6) -> m.ReformSpec:
    below, above = _support_guarantees()
    return m.ReformSpec(
        name="example1_reform2",
        constraints=(below, above,
                     m.RateBound(upper=cap, label="rate_cap")),
        objective=m.MinRevenueLoss(),
    )


def example1_complexity_spec() -> m.ReformSpec:
    below, above = _support_guarantees()
    return m.ReformSpec(
        name="example1_three_rates",
        constraints=(below, above),
        objective=m.MinComplexity(),
    )


# ---------------------------------------------------------------------------
# Example 2: brackets + healthcare benefit + child benefit, one group
# ---------------------------------------------------------------------------


def example2_code() -> TaxCode:
    brackets = TaxRule(
        id="income_tax",
        kind=BRACKET,
        input=PERSONAL_INCOME,
        topic="income_brackets",
        schedules={"all": _sched((25_000, 50_000, 75_000, 100_000),
                                 (0.10, 0.20, 0.30, 0.40, 0.50))},
    )
    healthcare = TaxRule(
        id="healthcare_benefit",
        kind=BENEFIT,
        input=PERSONAL_INCOME,
        topic="healthcare",
        schedules={"all": _sched((30_000, 40_000), (0.0, 0.15, 0.0), lump=-1_500.0)},
    )
    child = TaxRule(
        id="child_benefit",
        kind=BRACKET,
        input="children",
        topic="children",
        tie_rates=True,
        schedules={"all": _sched(CHILD_CUTOFFS, (-800.0,) * 101, input_id="children")},
    )
    return TaxCode(
        name="example2",
        rules=(brackets, healthcare, child),
        inputs={
            PERSONAL_INCOME: InputInfo("currency", income_like=True),
            "children": InputInfo("count"),
        },
    )


def example2_population() -> Population:
    code = example2_code()
    rng = np.random.default_rng(20_240_602)
    taxpayers = []
    for i in range(100):
        income = float(round(rng.uniform(2_000, 120_000)))
        children = float(rng.integers(0, 4))
        taxpayers.append(Taxpayer(
            id=f"t{i:03d}",
            inputs={PERSONAL_INCOME: income, "children": children},
            characteristics={},
            weight=1.0,
            household_id=f"hh{i:03d}",
            current_tax=0.0,
        ))
    return _stamp(code, taxpayers)


def example2_recovery_spec() -> m.ReformSpec:
    return m.ReformSpec(
        name="example2_recovery",
        constraints=(m.IncomeTight(selector=m.Selector(kind="all"), label="tight"),),
        objective=m.Feasibility(),
    )


def example2_reform2_spec() -> m.ReformSpec:
    """Freeze the child benefit and coarsen the income support."""
    below, above = _support_guarantees()
    return m.ReformSpec(
        name="example2_reform2",
        constraints=(below, above, m.RateBound(upper=0.6, label="rate_cap")),
        objective=m.MinRevenueLoss(),
        frozen_rules={"child_benefit": None},
        support_overrides={PERSONAL_INCOME: (25_000.0, 50_000.0, 75_000.0, 100_000.0)},
    )


# ---------------------------------------------------------------------------
# Example 3: multiple groups, household benefits, self-employment credit
# ---------------------------------------------------------------------------


def example3_code() -> TaxCode:
    brackets = TaxRule(
        id="income_tax",
        kind=BRACKET,
        input=PERSONAL_INCOME,
        topic="income_brackets",
        schedules={"all": _sched((25_000, 50_000, 75_000, 100_000),
                                 (0.10, 0.20, 0.30, 0.40, 0.50))},
    )
    healthcare = TaxRule(
        id="healthcare_benefit",
        kind=BENEFIT,
        input=HOUSEHOLD_INCOME,
        topic="healthcare",
        varies_by="partnership",
        schedules={
            "single": _sched((30_000, 40_000), (0.0, 0.15, 0.0), lump=-1_500.0,
                             input_id=HOUSEHOLD_INCOME),
            "fiscal_partner": _sched((30_000, 60_000), (0.0, 0.075, 0.0), lump=-2_250.0,
                                     input_id=HOUSEHOLD_INCOME),
        },
    )
    child = TaxRule(
        id="child_benefit",
        kind=BRACKET,
        input="children",
        topic="children",
        tie_rates=True,
        schedules={"all": _sched(CHILD_CUTOFFS, (-800.0,) * 101, input_id="children")},
    )
    credit = TaxRule(
        id="self_employed_credit",
        kind=TAX_CREDIT,
        input=PERSONAL_INCOME,
        topic="self_employed",
        references="income_tax",
        amount=15_000.0,
        eligibility={"employment": ("self_employed",)},
    )
    return TaxCode(
        name="example3",
        rules=(brackets, healthcare, child, credit),
        dimensions=(
            GroupDimension("employment", "employment",
                           {"labor": ("labor",), "self_employed": ("self_employed",)}),
            GroupDimension("partnership", "fiscal_partner",
                           {"fiscal_partner": ("yes",), "single": ("no",)}),
        ),
        inputs={
            PERSONAL_INCOME: InputInfo("currency", income_like=True),
            HOUSEHOLD_INCOME: InputInfo("currency", income_like=True),
            "children": InputInfo("count"),
        },
        comovements={HOUSEHOLD_INCOME: PERSONAL_INCOME},
    )


def example3_population() -> Population:
    """1,000 taxpayers, 300 of them in two-person fiscal partnerships."""
    code = example3_code()
    rng = np.random.default_rng(20_240_603)
    taxpayers = []
    idx = 0

    def draw_income():
        return float(round(rng.uniform(2_000, 120_000)))

    def employment():
        return "self_employed" if rng.random() < 0.2 else "labor"

    for h in range(300):
        incomes = [draw_income(), draw_income()]
        children = float(rng.integers(0, 4))
        for k in range(2):
            taxpayers.append(Taxpayer(
                id=f"t{idx:04d}",
                inputs={
                    PERSONAL_INCOME: incomes[k],
                    HOUSEHOLD_INCOME: incomes[0] + incomes[1],
                    "children": children if k == 0 else 0.0,
                },
                characteristics={"employment": employment(), "fiscal_partner": "yes"},
                weight=1.0,
                household_id=f"hh{h:04d}",
                current_tax=0.0,
            ))
            idx += 1
    for s in range(400):
        income = draw_income()
        taxpayers.append(Taxpayer(
            id=f"t{idx:04d}",
            inputs={
                PERSONAL_INCOME: income,
                HOUSEHOLD_INCOME: income,
                "children": float(rng.integers(0, 3)),
            },
            characteristics={"employment": employment(), "fiscal_partner": "no"},
            weight=1.0,
            household_id=f"hh{300 + s:04d}",
            current_tax=0.0,
        ))
        idx += 1
    return _stamp(code, taxpayers)


def example3_recovery_spec() -> m.ReformSpec:
    return m.ReformSpec(
        name="example3_recovery",
        constraints=(m.IncomeTight(selector=m.Selector(kind="all"), label="tight"),),
        objective=m.Feasibility(),
    )


def example3_reform_spec() -> m.ReformSpec:
    """Universal benefit: merge groups and drop household-income rates."""
    below, above = _support_guarantees()
    household = m.IncomeRelative(
        selector=m.Selector(kind="all"), epsilon=-0.10, direction=m.AT_LEAST,
        basis=m.NET, level=m.HOUSEHOLD_LEVEL, label="household_floor",
    )
    return m.ReformSpec(
        name="example3_reform",
        constraints=(below, above, household, m.RateBound(upper=0.6, label="rate_cap")),
        objective=m.MinRevenueLoss(),
        merge_dimensions=("employment", "partnership"),
        support_overrides={
            PERSONAL_INCOME: (25_000.0, 50_000.0, 75_000.0, 100_000.0),
            HOUSEHOLD_INCOME: None,
        },
    )


# ---------------------------------------------------------------------------
# Example 4: synthetic population at scale, many interacting rules
# ---------------------------------------------------------------------------


def example4_code() -> TaxCode:
    rules = (
        TaxRule(
            id="income_tax", kind=BRACKET, input=PERSONAL_INCOME,
            topic="income_brackets",
            schedules={"all": _sched((25_000, 50_000, 75_000, 100_000),
                                     (0.10, 0.35, 0.37, 0.45, 0.52))},
        ),
        TaxRule(
            id="general_credit", kind=BENEFIT, input=PERSONAL_INCOME,
            topic="general_credit",
            schedules={"all": _sched((25_000, 45_000), (0.0, 0.15, 0.0), lump=-3_000.0)},
        ),
        TaxRule(
            id="labor_credit", kind=BENEFIT, input=PERSONAL_INCOME, topic="labor",
            eligibility={"income_source": ("employment", "self_employed")},
            schedules={"all": _sched((30_000, 60_000), (0.0, 0.0933, 0.0), lump=-2_800.0)},
        ),
        TaxRule(
            id="labor_credit_extra", kind=BENEFIT, input=PERSONAL_INCOME, topic="labor",
            eligibility={"income_source": ("employment", "self_employed")},
            schedules={"all": _sched((), (0.0,), lump=-300.0)},
        ),
        TaxRule(
            id="healthcare_benefit", kind=BENEFIT, input=HOUSEHOLD_INCOME,
            topic="healthcare", varies_by="partnership",
            schedules={
                "single": _sched((20_000, 45_000), (0.0, 0.072, 0.0), lump=-1_800.0,
                                 input_id=HOUSEHOLD_INCOME),
                "fiscal_partner": _sched((25_000, 55_000), (0.0, 0.08, 0.0), lump=-2_400.0,
                                         input_id=HOUSEHOLD_INCOME),
            },
        ),
        TaxRule(
            id="rent_support", kind=BENEFIT, input=HOUSEHOLD_INCOME, topic="rental",
            eligibility={"renter": ("yes",)},
            schedules={"all": _sched((15_000, 35_000), (0.0, 0.10, 0.0), lump=-2_000.0,
                                     input_id=HOUSEHOLD_INCOME)},
        ),
        TaxRule(
            id="child_benefit", kind=BRACKET, input="children", topic="children",
            tie_rates=True,
            schedules={"all": _sched(CHILD_CUTOFFS, (-1_000.0,) * 101, input_id="children")},
        ),
        TaxRule(
            id="child_extra", kind=BRACKET, input="children", topic="children",
            tie_rates=True,
            schedules={"all": _sched(CHILD_CUTOFFS, (-250.0,) * 101, input_id="children")},
        ),
        TaxRule(
            id="child_supplement", kind=BENEFIT, input=HOUSEHOLD_INCOME, topic="children",
            eligibility={"has_children": ("yes",)},
            schedules={"all": _sched((25_000, 50_000), (0.0, 0.06, 0.0), lump=-1_500.0,
                                     input_id=HOUSEHOLD_INCOME)},
        ),
        TaxRule(
            id="elderly_credit", kind=BENEFIT, input=PERSONAL_INCOME, topic="elderly",
            eligibility={"pension_age": ("yes",)},
            schedules={"all": _sched((15_000, 40_000), (0.0, 0.10, 0.0), lump=-2_500.0)},
        ),
        TaxRule(
            id="single_credit", kind=BENEFIT, input=PERSONAL_INCOME,
            topic="single_households",
            eligibility={"fiscal_partner": ("no",)},
            schedules={"all": _sched((30_000, 45_000), (0.0, 0.06, 0.0), lump=-900.0)},
        ),
        TaxRule(
            id="single_extra", kind=BENEFIT, input=PERSONAL_INCOME,
            topic="single_households",
            eligibility={"fiscal_partner": ("no",)},
            schedules={"all": _sched((), (0.0,), lump=-150.0)},
        ),
        TaxRule(
            id="home_tax", kind=BRACKET, input="home_value", topic="home_value",
            schedules={"all": _sched((75_000,), (0.0, 0.0045), input_id="home_value")},
        ),
        TaxRule(
            id="asset_tax", kind=BRACKET, input="assets", topic="assets",
            schedules={"all": _sched((50_000,), (0.0, 0.012), input_id="assets")},
        ),
        TaxRule(
            id="self_employed_deduction", kind=TAX_CREDIT, input=PERSONAL_INCOME,
            topic="self_employed", references="income_tax", amount=7_000.0,
            eligibility={"income_source": ("self_employed",)},
        ),
    )
    return TaxCode(
        name="example4",
        rules=rules,
        dimensions=(
            GroupDimension("income_source", "income_source", {
                "benefits": ("benefits",), "employment": ("employment",),
                "self_employed": ("self_employed",)}),
            GroupDimension("partnership", "fiscal_partner",
                           {"fiscal_partner": ("yes",), "single": ("no",)}),
            GroupDimension("pension", "pension_age",
                           {"pension": ("yes",), "working_age": ("no",)}),
            GroupDimension("housing", "renter",
                           {"renter": ("yes",), "owner": ("no",)}),
            GroupDimension("family", "has_children",
                           {"family": ("yes",), "no_children": ("no",)}),
        ),
        inputs={
            **_INCOME_INPUTS,
            "children": InputInfo("count"),
            "home_value": InputInfo("currency"),
            "assets": InputInfo("currency"),
            "monthly_rent": InputInfo("currency"),
        },
        comovements={HOUSEHOLD_INCOME: PERSONAL_INCOME},
    )


def example4_config(taxpayers: int = 13_500, households: int = 8_500,
                    seed: int = 41) -> SyntheticPopulationConfig:
    return SyntheticPopulationConfig(taxpayers=taxpayers, households=households, seed=seed)


def example4_population(taxpayers: int = 13_500, households: int = 8_500,
                        seed: int = 41) -> Population:
    return generate_population(example4_config(taxpayers, households, seed),
                               code=example4_code())


def example4_stage1_spec(cap: float = 0.75) -> m.ReformSpec:
    return m.ReformSpec(
        name=f"example4_cap{cap:g}",
        constraints=(
            m.IncomeRelative(selector=m.Selector(kind="all"), epsilon=-0.05,
                             direction=m.AT_LEAST, basis=m.NET,
                             level=m.HOUSEHOLD_LEVEL, label="household_guarantee"),
            m.RateBound(upper=cap, label="pressure_cap"),
        ),
        objective=m.MinRevenueLoss(),
        variable_mode=m.SCALES_MODE,
    )


def example4_two_step_spec(cap: float = 0.75, slack: float = 1e8) -> m.ReformSpec:
    stage1 = example4_stage1_spec(cap)
    return m.ReformSpec(
        name=f"example4_two_step_cap{cap:g}",
        constraints=stage1.constraints,
        objective=m.Lexicographic(first=m.MinRevenueLoss(),
                                  then=m.MinComplexity(income_weight=2.0),
                                  slack=slack),
        variable_mode=m.SCALES_MODE,
    )


# ---------------------------------------------------------------------------
# Scenario catalogue (service + CLI demos)
# ---------------------------------------------------------------------------


def scenario_catalogue(small: bool = True) -> list[dict]:
    """Bundled demo scenarios as plain documents."""
    from .data.population import population_to_json
    from .schemas import code_to_json, reform_to_json

    entries = [
        ("example1_recovery", "Recover the five-bracket system exactly",
         example1_code(), example1_population(), example1_recovery_spec()),
        ("example1_reform1", "Tax break below 70k, budget neutral",
         example1_code(), example1_population(), example1_reform1_spec()),
        ("example1_reform2", "Cap rates at 60%, minimize revenue loss",
         example1_code(), example1_population(), example1_reform2_spec()),
        ("example2_recovery", "Recover brackets plus two benefits",
         example2_code(), example2_population(), example2_recovery_spec()),
        ("example2_reform2", "Frozen child benefit, coarser support",
         example2_code(), example2_population(), example2_reform2_spec()),
        ("example3_recovery", "Recover the multi-group system",
         example3_code(), example3_population(), example3_recovery_spec()),
        ("example3_reform", "Universal benefit across merged groups",
         example3_code(), example3_population(), example3_reform_spec()),
    ]
    if small:
        pop4 = example4_population(taxpayers=1_350, households=850, seed=41)
    else:
        pop4 = example4_population()
    entries.append((
        "example4_two_step", "Cap marginal pressure, then simplify",
        example4_code(), pop4, example4_two_step_spec(),
    ))
    return [
        {
            "name": name,
            "description": description,
            "code": code_to_json(code),
            "population": population_to_json(population),
            "reform": reform_to_json(spec),
        }
        for name, description, code, population, spec in entries
    ]
