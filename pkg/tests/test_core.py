import numpy as np
import pytest

from taxopt import (
    BENEFIT,
    BRACKET,
    INPUT_DEDUCTION,
    TAX_CREDIT,
    GroupDimension,
    RateLayout,
    RuleSchedule,
    Support,
    TaxCode,
    TaxRule,
    assign_group,
    bracketize,
    merge_supports,
)
from taxopt.errors import (
    DomainError,
    GroupResolutionError,
    MissingCharacteristicError,
    MissingInputError,
)
from taxopt.fixtures import example1_code, example2_code, example3_code

INCOME = "income_before_tax"
STANDARD = Support(INCOME, (25_000, 50_000, 75_000, 100_000))


class TestBracketize:
    def test_mid_bracket(self):
        assert bracketize(52_000, STANDARD) == [25_000, 25_000, 2_000, 0, 0]

    def test_top_bracket_overflow(self):
        assert bracketize(120_000, STANDARD) == [25_000, 25_000, 25_000, 25_000, 20_000]

    def test_zero(self):
        assert bracketize(0, STANDARD) == [0, 0, 0, 0, 0]

    def test_rejects_negative_and_nonfinite(self):
        with pytest.raises(DomainError):
            bracketize(-1.0, STANDARD)
        with pytest.raises(DomainError):
            bracketize(float("nan"), STANDARD)

    def test_partition_property(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            cutoffs = np.sort(rng.uniform(1, 100_000, size=rng.integers(1, 6)))
            support = Support(INCOME, tuple(np.unique(cutoffs)))
            x = float(rng.uniform(0, 150_000))
            pieces = bracketize(x, support)
            assert sum(pieces) == pytest.approx(x, abs=1e-9)
            widths = [hi - lo for lo, hi in
                      (support.interval(b) for b in range(support.num_brackets))]
            for piece, width in zip(pieces, widths):
                assert -1e-12 <= piece <= width + 1e-9

    def test_cutoff_convention_lower_bracket_wins(self):
        assert STANDARD.active_bracket(25_000.0) == 0
        assert STANDARD.active_bracket(25_000.01) == 1
        assert STANDARD.active_bracket(0.0) == 0


class TestSupportValidation:
    def test_rejects_descending(self):
        with pytest.raises(ValueError):
            Support(INCOME, (50_000, 25_000))

    def test_rejects_zero_cutoff(self):
        with pytest.raises(ValueError):
            Support(INCOME, (0, 25_000))

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            Support(INCOME, (25_000, 25_000))


def healthcare_rule(lump=-1_500.0, input_id="household_income"):
    return TaxRule(
        id="healthcare", kind=BENEFIT, input=input_id,
        schedules={"all": RuleSchedule(
            Support(input_id, (30_000, 40_000)), (0.0, 0.15, 0.0), lump)},
    )


class TestEvaluateRule:
    def test_five_bracket_example(self):
        code = example1_code()
        assert code.total_tax({INCOME: 52_000}, {}) == pytest.approx(8_100.0)

    def test_benefit_linear_nullification(self):
        rule = healthcare_rule()
        code = TaxCode("t", (rule,))
        value = code.rule_pressure(code.rules[0], {"household_income": 35_000}, {})
        assert value == pytest.approx(-750.0)  # -1500 + 0.15 * 5000

    def test_child_benefit_zero_children(self):
        code = example2_code()
        child = code.rule_by_id("child_benefit")
        assert code.rule_pressure(child, {"children": 0.0, INCOME: 0.0}, {}) == 0.0

    def test_missing_input_is_an_error(self):
        code = example1_code()
        with pytest.raises(MissingInputError):
            code.total_tax({}, {})

    def test_ineligible_contributes_zero(self):
        rule = TaxRule(
            id="credit", kind=BENEFIT, input=INCOME,
            eligibility={"employment": ("self_employed",)},
            schedules={"all": RuleSchedule(Support(INCOME, ()), (0.0,), -500.0)},
        )
        dims = (GroupDimension("employment", "employment",
                               {"labor": ("labor",), "self_employed": ("self_employed",)}),)
        code = TaxCode("t", (rule,), dimensions=dims)
        assert code.total_tax({INCOME: 10_000}, {"employment": "labor"}) == 0.0
        assert code.total_tax({INCOME: 10_000}, {"employment": "self_employed"}) == -500.0


class TestEvaluateCode:
    def test_example1_values(self):
        code = example1_code()
        assert code.total_tax({INCOME: 52_000}, {}) == pytest.approx(8_100.0)
        # Oracle: 2500 + 5000 + 7500 + 10000 + 10000
        assert code.total_tax({INCOME: 120_000}, {}) == pytest.approx(35_000.0)

    def test_example2_term_by_term(self):
        code = example2_code()
        total = code.total_tax({INCOME: 20_000, "children": 2.0}, {})
        assert total == pytest.approx(2_000.0 - 1_500.0 - 1_600.0)

    def test_unresolvable_group_names_dimension(self):
        code = example3_code()
        with pytest.raises(GroupResolutionError) as exc:
            code.total_tax(
                {INCOME: 10_000, "household_income": 10_000, "children": 0.0},
                {"employment": "weird", "fiscal_partner": "yes"},
            )
        assert "employment" in str(exc.value)

    def test_additivity_random_stacks(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            rules = []
            for r in range(rng.integers(1, 5)):
                cutoffs = tuple(np.unique(np.sort(rng.uniform(1_000, 90_000,
                                                              size=rng.integers(1, 4)))))
                support = Support(INCOME, cutoffs)
                rates = tuple(rng.uniform(-0.3, 0.6, size=len(cutoffs) + 1))
                lump = float(rng.uniform(-2_000, 0))
                kind = BENEFIT if rng.random() < 0.5 else BRACKET
                rules.append(TaxRule(
                    id=f"r{r}", kind=kind, input=INCOME,
                    schedules={"all": RuleSchedule(support, rates,
                                                   lump if kind == BENEFIT else 0.0)},
                ))
            code = TaxCode("rand", tuple(rules))
            x = {INCOME: float(rng.uniform(0, 150_000))}
            total = code.total_tax(x, {})
            parts = sum(code.rule_pressure(r, x, {}) for r in code.rules)
            assert total == parts  # additivity is exact


class TestMarginalPressure:
    def test_example1_at_52k(self):
        code = example1_code()
        assert code.marginal_rate({INCOME: 52_000}, {}, INCOME) == pytest.approx(0.30)

    def test_example2_phaseout_adds(self):
        code = example2_code()
        got = code.marginal_rate({INCOME: 35_000, "children": 0.0}, {}, INCOME)
        assert got == pytest.approx(0.35)

    def test_far_above_cutoffs_top_rate(self):
        code = example1_code()
        assert code.marginal_rate({INCOME: 5_000_000}, {}, INCOME) == pytest.approx(0.50)

    def test_household_comovement(self):
        code = example3_code()
        inputs = {INCOME: 35_000.0, "household_income": 35_000.0, "children": 0.0}
        chars = {"employment": "labor", "fiscal_partner": "no"}
        got = code.marginal_rate(inputs, chars, INCOME)
        assert got == pytest.approx(0.20 + 0.15)

    def test_finite_difference_agreement(self):
        code = example3_code()
        rng = np.random.default_rng(4)
        checked = 0
        for _ in range(300):
            x = float(rng.uniform(100, 150_000))
            chars = {
                "employment": str(rng.choice(["labor", "self_employed"])),
                "fiscal_partner": str(rng.choice(["yes", "no"])),
            }
            inputs = {INCOME: x, "household_income": x,
                      "children": float(rng.integers(0, 3))}
            cutoffs = {15_000, 25_000, 30_000, 40_000, 50_000, 60_000, 75_000, 100_000}
            if any(abs(x - c) < 2.0 for c in cutoffs):
                continue
            step = 1.0
            up = dict(inputs)
            up[INCOME] += step
            up["household_income"] += step
            dn = dict(inputs)
            dn[INCOME] -= step
            dn["household_income"] -= step
            fd = (code.total_tax(up, chars) - code.total_tax(dn, chars)) / (2 * step)
            assert code.marginal_rate(inputs, chars, INCOME) == pytest.approx(fd, abs=1e-6)
            checked += 1
        assert checked > 200


class TestMergeSupports:
    def test_bracket_benefit_union(self):
        code = example2_code()
        merged = merge_supports(code.rules, "all", INCOME)
        assert merged.cutoffs == (25_000, 30_000, 40_000, 50_000, 75_000, 100_000)

    def test_single_rule_identity(self):
        code = example1_code()
        merged = merge_supports(code.rules, "all", INCOME)
        assert merged.cutoffs == (25_000, 50_000, 75_000, 100_000)

    def test_duplicates_deduplicated(self):
        a = TaxRule(id="a", kind=BRACKET, input=INCOME,
                    schedules={"all": RuleSchedule(Support(INCOME, (10_000, 20_000)),
                                                   (0.1, 0.2, 0.3))})
        b = TaxRule(id="b", kind=BRACKET, input=INCOME,
                    schedules={"all": RuleSchedule(Support(INCOME, (20_000,)), (0.0, 0.1))})
        merged = merge_supports([a, b], "all", INCOME)
        assert merged.cutoffs == (10_000, 20_000)

    def test_piecewise_linear_closure(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            rules = []
            for r in range(2):
                cutoffs = tuple(np.unique(np.sort(rng.uniform(1_000, 90_000,
                                                              size=rng.integers(1, 5)))))
                rates = tuple(rng.uniform(-0.5, 0.8, size=len(cutoffs) + 1))
                rules.append(TaxRule(
                    id=f"r{r}", kind=BRACKET, input=INCOME,
                    schedules={"all": RuleSchedule(Support(INCOME, cutoffs), rates)},
                ))
            code = TaxCode("pair", tuple(rules))
            merged = merge_supports(code.rules, "all", INCOME)
            edges = (0.0,) + merged.cutoffs + (merged.cutoffs[-1] + 50_000,)
            for lo, hi in zip(edges, edges[1:]):
                xs = np.linspace(lo, hi, 5)[1:-1]
                ys = [code.total_tax({INCOME: float(x)}, {}) for x in xs]
                s1 = (ys[1] - ys[0]) / (xs[1] - xs[0])
                s2 = (ys[2] - ys[1]) / (xs[2] - xs[1])
                assert abs(s1 - s2) <= 1e-9 * max(1.0, abs(s1))


class TestGroups:
    DIMS = (
        GroupDimension("employment", "employment",
                       {"labor": ("labor",), "self_employed": ("self_employed",)}),
        GroupDimension("partnership", "partner",
                       {"fiscal_partner": ("yes",), "single": ("no",)}),
    )

    def test_assignment(self):
        key = assign_group({"employment": "self_employed", "partner": "yes"}, self.DIMS)
        assert key == ("self_employed", "fiscal_partner")

    def test_empty_dimensions_unit_group(self):
        assert assign_group({"anything": "x"}, ()) == ()

    def test_missing_characteristic_names_field(self):
        with pytest.raises(MissingCharacteristicError) as exc:
            assign_group({"employment": "labor"}, self.DIMS)
        assert "partner" in str(exc.value)

    def test_overlapping_values_rejected(self):
        with pytest.raises(ValueError):
            GroupDimension("bad", "c", {"a": ("x",), "b": ("x",)})

    def test_same_group_same_pressure(self):
        code = example3_code()
        inputs = {INCOME: 43_210.0, "household_income": 43_210.0, "children": 1.0}
        chars = {"employment": "self_employed", "fiscal_partner": "no"}
        a = code.total_tax(inputs, chars)
        b = code.total_tax(dict(inputs), dict(chars))
        assert a == b


class TestDeductibleNormalization:
    def flat_two_rate(self):
        # 10% until 50k, 20% after (footnote example).
        return TaxRule(id="base", kind=BRACKET, input=INCOME,
                       schedules={"all": RuleSchedule(Support(INCOME, (50_000,)),
                                                      (0.1, 0.2))})

    def test_input_reducing_shifts_brackets(self):
        base = self.flat_two_rate()
        shifted = TaxRule(id="shifted", kind=INPUT_DEDUCTION, input=INCOME, amount=20_000,
                          schedules=base.schedules)
        code = TaxCode("t", (shifted,))
        assert code.rules[0].kind == BRACKET
        assert code.total_tax({INCOME: 70_000}, {}) == pytest.approx(5_000.0)
        assert code.total_tax({INCOME: 15_000}, {}) == pytest.approx(0.0)

    def test_tax_credit_negates_first_slice(self):
        base = self.flat_two_rate()
        credit = TaxRule(id="credit", kind=TAX_CREDIT, input=INCOME, amount=20_000,
                         references="base")
        code = TaxCode("t", (base, credit))
        assert code.total_tax({INCOME: 70_000}, {}) == pytest.approx(7_000.0)
        norm = code.rule_by_id("credit")
        assert norm.kind == BRACKET
        assert norm.schedules["all"].support.cutoffs == (20_000.0,)
        assert norm.schedules["all"].rates == (-0.1, 0.0)

    def test_credit_crossing_a_cutoff(self):
        base = self.flat_two_rate()
        credit = TaxRule(id="credit", kind=TAX_CREDIT, input=INCOME, amount=60_000,
                         references="base")
        code = TaxCode("t", (base, credit))
        # Credits 10% of 50k plus 20% of 10k.
        assert code.total_tax({INCOME: 70_000}, {}) == pytest.approx(
            (5_000 + 4_000) - (5_000 + 2_000))


class TestRateLayoutConsistency:
    def test_canonical_matches_rule_sum(self):
        code = example3_code()
        layout = RateLayout(code)
        vec = layout.canonical_vector()
        rng = np.random.default_rng(12)
        for _ in range(200):
            x = float(rng.uniform(0, 140_000))
            hh = x + float(rng.uniform(0, 50_000))
            inputs = {INCOME: x, "household_income": hh,
                      "children": float(rng.integers(0, 4))}
            chars = {"employment": str(rng.choice(["labor", "self_employed"])),
                     "fiscal_partner": str(rng.choice(["yes", "no"]))}
            direct = code.total_tax(inputs, chars)
            via_layout = layout.evaluate(inputs, chars, vec)
            assert via_layout == pytest.approx(direct, rel=1e-9, abs=1e-9)

    def test_rate_set_round_trip(self):
        code = example2_code()
        layout = RateLayout(code)
        vec = layout.canonical_vector()
        rates = layout.to_rate_set(vec)
        back = layout.from_rate_set(rates)
        np.testing.assert_array_equal(vec, back)
        assert rates.lumps[("healthcare_benefit", "all")] == -1_500.0
