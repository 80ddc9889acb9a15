import numpy as np
import pytest

from taxopt import fixtures as fx
from taxopt import model as m
from taxopt import scenarios as sc
from taxopt.core import RuleSchedule, Support, TaxCode, TaxRule
from taxopt.data.population import Population, Taxpayer
from taxopt.data.report import build_report
from taxopt.errors import TaxOptError
from taxopt.solver import audit_solution

INCOME = "income_before_tax"


@pytest.fixture(scope="module")
def ex1():
    return fx.example1_code(), fx.example1_population()


@pytest.fixture(scope="module")
def ex2():
    return fx.example2_code(), fx.example2_population()


@pytest.fixture(scope="module")
def ex3():
    return fx.example3_code(), fx.example3_population()


class TestRecovery:
    def test_example1_exact(self, ex1):
        code, pop = ex1
        result = sc.recover(code, pop)
        assert result.is_optimal
        np.testing.assert_allclose(result.x, [0.1, 0.2, 0.3, 0.4, 0.5], atol=1e-6)
        assert not result.diagnostics["rank_deficient"]

    def test_example2_recovers_benefits(self, ex2):
        code, pop = ex2
        result = sc.recover(code, pop)
        assert result.is_optimal
        rates = result.rates
        # Phase-out slope on [30k, 40k] sits 0.15 above the bracket rate.
        key_30_40 = (INCOME, (), 2)
        key_25_30 = (INCOME, (), 1)
        assert rates.rates[key_30_40] - rates.rates[key_25_30] == pytest.approx(0.15, abs=1e-6)
        assert rates.lumps[("healthcare_benefit", "all")] == pytest.approx(-1_500.0, abs=1e-4)
        assert rates.rates[("children", (), 0)] == pytest.approx(-800.0, abs=1e-4)

    def test_example3_recovers_group_structure(self, ex3):
        code, pop = ex3
        result = sc.recover(code, pop)
        assert result.is_optimal
        assert not result.diagnostics["rank_deficient"]
        layout = result.compiled.layout
        se = ("employment", "self_employed")
        assert result.x[layout.rate_index(INCOME, (se,), 0)] == pytest.approx(0.0, abs=1e-6)
        assert result.x[layout.rate_index(INCOME, (se,), 1)] == pytest.approx(0.1, abs=1e-6)
        partner = ("partnership", "fiscal_partner")
        assert result.rates.lumps[("healthcare_benefit", "fiscal_partner")] == pytest.approx(
            -2_250.0, abs=1e-3)
        assert result.x[layout.rate_index("household_income", (partner,), 1)] == \
            pytest.approx(0.075, abs=1e-6)

    def test_underdetermined_reports_rank(self, ex1):
        code, _ = ex1
        single = Population((Taxpayer("only", {INCOME: 52_000.0}, {}, 1.0, "h", 8_100.0),))
        result = sc.recover(code, single)
        assert result.diagnostics["rank_deficient"]
        assert result.diagnostics["column_rank"] < 5

    def test_random_recovery_battery(self):
        rng = np.random.default_rng(17)
        for trial in range(10):
            cutoffs = tuple(np.unique(np.sort(rng.uniform(5_000, 95_000, size=4))))
            rates = tuple(rng.uniform(0.02, 0.6, size=5))
            rule = TaxRule(id="r", kind="bracket", input=INCOME,
                           schedules={"all": RuleSchedule(Support(INCOME, cutoffs), rates)})
            code = TaxCode(f"rand{trial}", (rule,))
            taxpayers = []
            for i, x in enumerate(rng.uniform(500, 140_000, size=100)):
                inputs = {INCOME: float(x)}
                taxpayers.append(Taxpayer(f"t{i}", inputs, {}, 1.0, f"h{i}",
                                          code.total_tax(inputs, {})))
            result = sc.recover(code, Population(tuple(taxpayers)))
            assert result.is_optimal
            np.testing.assert_allclose(result.x, rates, atol=1e-6)

    def test_recovery_idempotent_on_reform_output(self, ex1):
        code, pop = ex1
        reform = sc.solve_reform(fx.example1_reform2_spec(), code, pop)
        assert reform.is_optimal
        layout = reform.compiled.layout
        restamped = Population(tuple(
            Taxpayer(t.id, t.inputs, t.characteristics, t.weight, t.household_id,
                     layout.evaluate(t.inputs, t.characteristics, reform.x))
            for t in pop
        ))
        again = sc.recover(code, restamped)
        assert again.is_optimal
        np.testing.assert_allclose(again.x, reform.x, atol=1e-6)


class TestExample1Reforms:
    def test_reform1_guarantees_hold(self, ex1):
        code, pop = ex1
        result = sc.solve_reform(fx.example1_reform1_spec(), code, pop)
        assert result.is_optimal
        taxes = result.compiled.taxes(result.x)
        for t, tax in zip(pop, taxes):
            x = t.inputs[INCOME]
            net_old = x - t.current_tax
            net_new = x - tax
            if x < 70_000:
                assert net_new >= net_old * 1.05 - 1e-4
            else:
                assert net_new >= net_old * 0.90 - 1e-4
        delta = result.compiled.revenue_loss(result.x)
        assert abs(delta) <= result.compiled.budget_tolerance + 1e-6
        assert 0.60 <= result.x[4] <= 0.68  # top rate near the documented 64%

    def test_reform2_cap_and_minimal_loss(self, ex1):
        code, pop = ex1
        result = sc.solve_reform(fx.example1_reform2_spec(), code, pop)
        assert result.is_optimal
        assert np.all(result.x <= 0.6 + 1e-9)
        # The relaxed system contains the original, so a cap of 1.0 loses nothing.
        relaxed = sc.solve_reform(fx.example1_reform2_spec(cap=1.0), code, pop)
        assert relaxed.revenue_loss <= 1e-6
        assert result.revenue_loss >= relaxed.revenue_loss - 1e-9

    def test_reform2_matches_grid_search_on_two_variables(self):
        # Reduced instance: two brackets at rates whose guarantee-binding
        # reform rates (0.16 and 0.475) lie exactly on the search grid.
        support = (50_000.0,)
        rule = TaxRule(id="r", kind="bracket", input=INCOME,
                       schedules={"all": RuleSchedule(Support(INCOME, support), (0.2, 0.5))})
        code = TaxCode("two_var", (rule,))
        rng = np.random.default_rng(23)
        incomes = np.concatenate([rng.uniform(5_000, 49_000, size=30),
                                  rng.uniform(70_000, 120_000, size=30)])
        taxpayers = []
        for i, x in enumerate(incomes):
            inputs = {INCOME: float(x)}
            taxpayers.append(Taxpayer(f"t{i}", inputs, {}, 1.0, f"h{i}",
                                      code.total_tax(inputs, {})))
        pop = Population(tuple(taxpayers))
        spec = fx.example1_reform2_spec()
        result = sc.solve_reform(spec, code, pop)
        assert result.is_optimal

        # Independent oracle: exhaustive 0.001-step grid over both rates.
        xs = np.array([t.inputs[INCOME] for t in pop])
        old = np.array([t.current_tax for t in pop])
        lo_piece = np.minimum(xs, 50_000.0)
        hi_piece = np.maximum(xs - 50_000.0, 0.0)
        grid = np.arange(0.0, 0.600001, 0.001)
        below = xs < 70_000
        net_floor = np.where(below, (xs - old) * 1.05, (xs - old) * 0.90)
        best = np.inf
        best_rates = None
        for a1 in grid:
            taxes = np.outer(np.ones_like(grid), lo_piece * a1) + np.outer(grid, hi_piece)
            feasible = np.all(xs - taxes >= net_floor - 1e-9, axis=1)
            if feasible.any():
                losses = np.sum(old - taxes, axis=1)
                pick = int(np.argmin(np.where(feasible, losses, np.inf)))
                if losses[pick] < best:
                    best = float(losses[pick])
                    best_rates = (float(a1), float(grid[pick]))
        assert best_rates == (0.16, 0.6)
        np.testing.assert_allclose(result.x, best_rates, atol=1e-6)
        assert result.revenue_loss == pytest.approx(best, abs=1e-4 * max(1, abs(best)))


class TestComplexityAndFreeze:
    def test_example1_three_rates(self, ex1):
        code, pop = ex1
        result = sc.solve_reform(fx.example1_complexity_spec(), code, pop)
        assert result.is_optimal
        active = int(np.sum(np.abs(result.x[:5]) > 1e-7))
        assert active <= 3

    def test_example2_frozen_child_benefit(self, ex2):
        code, pop = ex2
        result = sc.solve_reform(fx.example2_reform2_spec(), code, pop)
        assert result.is_optimal
        for t, row in zip(pop, result.compiled.rows):
            assert row.constant == pytest.approx(-800.0 * t.inputs["children"])
        assert np.all(result.x <= 0.6 + 1e-9)


class TestInfeasibility:
    def test_universal_cut_with_revenue_gain(self, ex1):
        code, pop = ex1
        spec = m.ReformSpec(
            name="impossible",
            constraints=(
                m.IncomeRelative(selector=m.Selector(kind="all"), epsilon=0.02,
                                 direction=m.AT_LEAST, basis=m.NET,
                                 label="everyone_gains"),
                m.Budget(direction=m.LOSS_AT_MOST, cap=-1.0, label="revenue_up"),
            ),
            objective=m.Feasibility(),
        )
        result = sc.solve_reform(spec, code, pop)
        assert result.status == "infeasible"
        assert result.conflicts
        from taxopt.solver import verify_conflict

        assert verify_conflict(result.compiled.problem, result.conflicts)


class TestExample3Reform:
    def test_universal_benefit_plausible(self, ex3):
        code, pop = ex3
        result = sc.solve_reform(fx.example3_reform_spec(), code, pop)
        assert result.is_optimal
        lump = result.rates.lumps[("healthcare_benefit", "all")]
        assert -6_000.0 < lump < 0.0  # a universal transfer, sane magnitude
        assert np.all(result.x[:7] <= 0.6 + 1e-9)


@pytest.fixture(scope="module")
def ex4_small():
    return fx.example4_code(), fx.example4_population(
        taxpayers=1_350, households=850, seed=41)


class TestTwoStepAndFrontier:
    def test_two_step_reduces_rule_count(self, ex4_small):
        code, pop = ex4_small
        first, second = sc.two_step_reform(code, pop, cap=0.75, slack=1e7)
        assert first.is_optimal and second.is_optimal
        current = sum(1 for c in sc.rule_census(second.compiled, None) if c["active"])
        assert second.active_rule_count() < current
        assert second.revenue_loss <= first.revenue_loss + 1e7 + 1e-3

    def test_zero_slack_binds_stage1_optimum(self, ex4_small):
        code, pop = ex4_small
        first, second = sc.two_step_reform(code, pop, cap=0.75, slack=0.0)
        assert second.revenue_loss <= first.revenue_loss + second.compiled.budget_tolerance

    def test_huge_slack_equals_pure_complexity(self, ex4_small):
        code, pop = ex4_small
        _, generous = sc.two_step_reform(code, pop, cap=0.75, slack=1e18)
        spec = m.ReformSpec(
            name="pure_complexity",
            constraints=(
                m.IncomeRelative(selector=m.Selector(kind="all"), epsilon=-0.05,
                                 direction=m.AT_LEAST, basis=m.NET,
                                 level=m.HOUSEHOLD_LEVEL),
                m.RateBound(upper=0.75),
            ),
            objective=m.MinComplexity(income_weight=2.0),
            variable_mode=m.SCALES_MODE,
        )
        unconstrained = sc.solve_reform(spec, code, pop)
        assert generous.solution.objective == pytest.approx(
            unconstrained.solution.objective, abs=1e-6)

    def test_frontier_monotone(self, ex4_small):
        code, pop = ex4_small
        entries = sc.sweep_frontier(code, pop, [0.65, 0.70, 0.75, 0.80])
        losses = [e.revenue_loss for e in entries if e.revenue_loss is not None]
        assert len(losses) >= 2
        for earlier, later in zip(losses, losses[1:]):
            assert later <= earlier + 1e-6 * max(1.0, abs(earlier))

    def test_single_cap(self, ex4_small):
        code, pop = ex4_small
        entries = sc.sweep_frontier(code, pop, [0.75])
        assert len(entries) == 1

    def test_unsorted_caps_rejected(self, ex4_small):
        code, pop = ex4_small
        with pytest.raises(ValueError):
            sc.sweep_frontier(code, pop, [0.8, 0.65])

    def test_infeasible_cap_marked_not_fatal(self, ex1):
        code, pop = ex1
        def build(cap):
            return m.ReformSpec(
                name=f"tight{cap:g}",
                constraints=(
                    m.IncomeTight(selector=m.Selector(kind="all")),
                    m.RateBound(upper=cap),
                ),
                objective=m.MinRevenueLoss(),
            )
        entries = sc.sweep_frontier(code, pop, [0.3, 0.6], spec_builder=build)
        assert entries[0].status == "infeasible"
        assert entries[0].conflicts
        assert entries[1].status == "optimal"


class TestReports:
    def test_report_refuses_non_optimal(self, ex1):
        code, pop = ex1
        spec = m.ReformSpec(constraints=(
            m.IncomeRelative(selector=m.Selector(kind="all"), epsilon=0.02,
                             direction=m.AT_LEAST, basis=m.NET),
            m.Budget(direction=m.LOSS_AT_MOST, cap=-1.0),
        ))
        result = sc.solve_reform(spec, code, pop)
        with pytest.raises(TaxOptError, match="infeasible"):
            build_report(result)

    def test_recovery_report_contents(self, ex1, tmp_path):
        from taxopt.data.report import write_report

        code, pop = ex1
        result = sc.recover(code, pop)
        report = build_report(result)
        for row in report["rates"]:
            assert row["new"] == pytest.approx(row["old"], abs=1e-6)
        assert report["revenue_loss"] == pytest.approx(0.0, abs=result.compiled.budget_tolerance)
        for row in report["taxpayers"]:
            assert row["new_tax"] == pytest.approx(row["old_tax"], abs=1e-4)
        paths = write_report(result, tmp_path)
        for path in paths.values():
            assert (tmp_path / path.split("/")[-1]).exists()

    def test_detail_cap_downsamples(self, ex1):
        code, pop = ex1
        result = sc.recover(code, pop)
        report = build_report(result, detail_cap=10)
        assert len(report["taxpayers"]) == 10
        assert len(report["marginal_series"]) == 10


class TestAuditsEverywhere:
    def test_every_optimal_scenario_passes_audit(self, ex1, ex2, ex3):
        for (code, pop), spec in [
            (ex1, fx.example1_reform1_spec()),
            (ex1, fx.example1_reform2_spec()),
            (ex2, fx.example2_reform2_spec()),
            (ex3, fx.example3_reform_spec()),
        ]:
            result = sc.solve_reform(spec, code, pop)
            assert result.is_optimal
            assert audit_solution(result.compiled.problem, result.x) == []
