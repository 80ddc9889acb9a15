"""Piecewise-linear tax codes as constrained-optimization problems."""

from .core import (
    BENEFIT,
    BRACKET,
    INPUT_DEDUCTION,
    TAX_CREDIT,
    GroupDimension,
    InputInfo,
    RateLayout,
    RateSet,
    RuleSchedule,
    Support,
    TaxCode,
    TaxRule,
    assign_group,
    bracketize,
    evaluate_code,
    marginal_pressure,
    merge_supports,
)

__all__ = [
    "BENEFIT",
    "BRACKET",
    "INPUT_DEDUCTION",
    "TAX_CREDIT",
    "GroupDimension",
    "InputInfo",
    "RateLayout",
    "RateSet",
    "RuleSchedule",
    "Support",
    "TaxCode",
    "TaxRule",
    "assign_group",
    "bracketize",
    "evaluate_code",
    "marginal_pressure",
    "merge_supports",
]

__version__ = "0.1.0"
