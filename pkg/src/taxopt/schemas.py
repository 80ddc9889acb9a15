"""Versioned JSON document schemas and converters.

Three documents cross process boundaries: tax codes, reform recipes and
populations.  The CLI, the HTTP service and the browser workbench all
speak exactly these schemas; validation failures carry JSON paths.
"""

from __future__ import annotations

import jsonschema

from . import model as m
from .core import GroupDimension, InputInfo, RuleSchedule, Support, TaxCode, TaxRule
from .errors import ValidationError

SCHEMA_VERSION = 1

_SELECTOR_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["all", "ids", "input_range", "quantile", "characteristic"]},
        "ids": {"type": "array", "items": {"type": "string"}},
        "input": {"type": "string"},
        "minimum": {"type": ["number", "null"]},
        "maximum": {"type": ["number", "null"]},
        "lower_quantile": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "upper_quantile": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "characteristic": {"type": ["string", "null"]},
        "values": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}

_CONSTRAINT_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["income_relative", "income_absolute", "income_tight",
                          "rate_bound", "rate_monotone", "budget", "mirror"]},
        "selector": _SELECTOR_SCHEMA,
        "epsilon": {"type": "number", "exclusiveMinimum": -1},
        "direction": {"type": "string"},
        "level": {"enum": ["taxpayer", "household", "group"]},
        "basis": {"enum": ["net", "gross"]},
        "floor": {"type": ["number", "null"]},
        "ceiling": {"type": ["number", "null"]},
        "upper": {"type": ["number", "null"]},
        "lower": {"type": ["number", "null"]},
        "input": {"type": ["string", "null"]},
        "cap": {"type": ["number", "null"]},
        "taxpayer": {"type": "string"},
        "mirror": {"type": "string"},
        "label": {"type": ["string", "null"]},
    },
    "additionalProperties": False,
}

_OBJECTIVE_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["feasibility", "min_revenue_loss", "min_complexity",
                          "lexicographic"]},
        "big_m": {"type": ["number", "null"]},
        "income_weight": {"type": "number"},
        "first": {"type": "object"},
        "then": {"type": "object"},
        "slack": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
}

REFORM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "reform",
    "type": "object",
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "constraints": {"type": "array", "items": _CONSTRAINT_SCHEMA},
        "objective": _OBJECTIVE_SCHEMA,
        "frozen_rules": {"type": "object"},
        "support_overrides": {
            "type": "object",
            "additionalProperties": {
                "type": ["array", "null"], "items": {"type": "number"},
            },
        },
        "merge_dimensions": {"type": "array", "items": {"type": "string"}},
        "variable_mode": {"enum": ["rates", "rule_scales"]},
        "rate_bounds": {"type": "array", "items": {"type": "number"},
                        "minItems": 2, "maxItems": 2},
        "amount_bounds": {"type": "array", "items": {"type": "number"},
                          "minItems": 2, "maxItems": 2},
        "scale_bounds": {"type": "array", "items": {"type": "number"},
                         "minItems": 2, "maxItems": 2},
    },
    "additionalProperties": False,
}

_SCHEDULE_SCHEMA = {
    "type": "object",
    "required": ["cutoffs", "rates"],
    "properties": {
        "cutoffs": {"type": "array", "items": {"type": "number"}},
        "rates": {"type": "array", "items": {"type": "number"}},
        "lump_sum": {"type": "number"},
    },
    "additionalProperties": False,
}

TAXCODE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "tax-code",
    "type": "object",
    "required": ["name", "rules"],
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "inputs": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "properties": {
                    "unit": {"enum": ["currency", "count"]},
                    "income_like": {"type": "boolean"},
                },
                "additionalProperties": False,
            },
        },
        "dimensions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "characteristic", "groups"],
                "properties": {
                    "name": {"type": "string"},
                    "characteristic": {"type": "string"},
                    "groups": {
                        "type": "object",
                        "additionalProperties": {
                            "type": "array", "items": {"type": "string"},
                        },
                    },
                },
                "additionalProperties": False,
            },
        },
        "comovements": {"type": "object", "additionalProperties": {"type": "string"}},
        "rules": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind", "input"],
                "properties": {
                    "id": {"type": "string"},
                    "kind": {"enum": ["bracket", "benefit", "input_deduction", "tax_credit"]},
                    "input": {"type": "string"},
                    "topic": {"type": "string"},
                    "varies_by": {"type": ["string", "null"]},
                    "tie_rates": {"type": "boolean"},
                    "frozen": {"type": "boolean"},
                    "eligibility": {
                        "type": ["object", "null"],
                        "additionalProperties": {"type": "array", "items": {"type": "string"}},
                    },
                    "schedules": {"type": "object", "additionalProperties": _SCHEDULE_SCHEMA},
                    "amount": {"type": "number"},
                    "references": {"type": ["string", "null"]},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


def _validate(document: dict, schema: dict, what: str) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    issues = []
    for err in sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path)):
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        issues.append(f"{what} at {path}: {err.message}")
    if issues:
        raise ValidationError(issues)


# ---------------------------------------------------------------------------
# Tax code documents
# ---------------------------------------------------------------------------


def code_to_json(code: TaxCode) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "name": code.name,
        "inputs": {
            name: {"unit": info.unit, "income_like": info.income_like}
            for name, info in sorted(code.inputs.items())
        },
        "dimensions": [
            {
                "name": d.name,
                "characteristic": d.characteristic,
                "groups": {label: list(values) for label, values in d.groups.items()},
            }
            for d in code.dimensions
        ],
        "comovements": dict(code.comovements),
        "rules": [
            {
                "id": r.id,
                "kind": r.kind,
                "input": r.input,
                "topic": r.topic,
                "varies_by": r.varies_by,
                "tie_rates": r.tie_rates,
                "frozen": r.frozen,
                "eligibility": (
                    {k: list(v) for k, v in r.eligibility.items()}
                    if r.eligibility else None
                ),
                "schedules": {
                    label: {
                        "cutoffs": list(s.support.cutoffs),
                        "rates": list(s.rates),
                        "lump_sum": s.lump_sum,
                    }
                    for label, s in r.schedules.items()
                },
            }
            for r in code.rules
        ],
    }


def code_from_json(document: dict) -> TaxCode:
    _validate(document, TAXCODE_SCHEMA, "tax-code")
    rules = []
    for rd in document["rules"]:
        input_id = rd["input"]
        schedules = {
            label: RuleSchedule(
                Support(input_id, tuple(sd["cutoffs"])),
                tuple(sd["rates"]),
                sd.get("lump_sum", 0.0),
            )
            for label, sd in rd.get("schedules", {}).items()
        }
        rules.append(TaxRule(
            id=rd["id"],
            kind=rd["kind"],
            input=input_id,
            schedules=schedules,
            varies_by=rd.get("varies_by"),
            eligibility=(
                {k: tuple(v) for k, v in rd["eligibility"].items()}
                if rd.get("eligibility") else None
            ),
            frozen=rd.get("frozen", False),
            tie_rates=rd.get("tie_rates", False),
            topic=rd.get("topic", ""),
            amount=rd.get("amount", 0.0),
            references=rd.get("references"),
        ))
    dimensions = tuple(
        GroupDimension(
            d["name"], d["characteristic"],
            {label: tuple(values) for label, values in d["groups"].items()},
        )
        for d in document.get("dimensions", [])
    )
    inputs = {
        name: InputInfo(unit=info.get("unit", "currency"),
                        income_like=info.get("income_like", False))
        for name, info in document.get("inputs", {}).items()
    }
    try:
        return TaxCode(
            name=document["name"],
            rules=tuple(rules),
            dimensions=dimensions,
            inputs=inputs,
            comovements=dict(document.get("comovements", {})),
        )
    except ValueError as exc:
        raise ValidationError([f"tax-code: {exc}"]) from exc


# ---------------------------------------------------------------------------
# Reform documents
# ---------------------------------------------------------------------------

_SELECTOR_FIELDS = ("kind", "ids", "input", "minimum", "maximum",
                    "lower_quantile", "upper_quantile", "characteristic", "values")


def _selector_to_json(sel: m.Selector) -> dict:
    out: dict = {"kind": sel.kind}
    if sel.kind == "ids":
        out["ids"] = list(sel.ids)
    if sel.kind in ("input_range", "quantile"):
        out["input"] = sel.input
    if sel.kind == "input_range":
        out["minimum"] = sel.minimum
        out["maximum"] = sel.maximum
    if sel.kind == "quantile":
        out["lower_quantile"] = sel.lower_quantile
        out["upper_quantile"] = sel.upper_quantile
    if sel.kind == "characteristic":
        out["characteristic"] = sel.characteristic
        out["values"] = list(sel.values)
    return out


def _selector_from_json(doc: dict) -> m.Selector:
    doc = dict(doc or {"kind": "all"})
    return m.Selector(
        kind=doc.get("kind", "all"),
        ids=tuple(doc.get("ids", ())),
        input=doc.get("input", m.PERSONAL_INCOME),
        minimum=doc.get("minimum"),
        maximum=doc.get("maximum"),
        lower_quantile=doc.get("lower_quantile"),
        upper_quantile=doc.get("upper_quantile"),
        characteristic=doc.get("characteristic"),
        values=tuple(doc.get("values", ())),
    )


def _constraint_to_json(con) -> dict:
    out = {"kind": con.kind}
    if con.label:
        out["label"] = con.label
    if isinstance(con, m.IncomeRelative):
        out.update(selector=_selector_to_json(con.selector), epsilon=con.epsilon,
                   direction=con.direction, level=con.level, basis=con.basis)
    elif isinstance(con, m.IncomeAbsolute):
        out.update(selector=_selector_to_json(con.selector), floor=con.floor,
                   ceiling=con.ceiling, level=con.level)
    elif isinstance(con, m.IncomeTight):
        out.update(selector=_selector_to_json(con.selector), level=con.level)
    elif isinstance(con, m.RateBound):
        out.update(upper=con.upper, lower=con.lower, input=con.input)
    elif isinstance(con, m.RateMonotone):
        out.update(input=con.input)
    elif isinstance(con, m.Budget):
        out.update(direction=con.direction, cap=con.cap)
    elif isinstance(con, m.Mirror):
        out.update(taxpayer=con.taxpayer, mirror=con.mirror, cap=con.cap)
    return out


def _constraint_from_json(doc: dict):
    kind = doc["kind"]
    label = doc.get("label")
    if kind == "income_relative":
        return m.IncomeRelative(
            selector=_selector_from_json(doc.get("selector")),
            epsilon=doc.get("epsilon", 0.0),
            direction=doc.get("direction", m.AT_LEAST),
            level=doc.get("level", m.TAXPAYER_LEVEL),
            basis=doc.get("basis", m.NET),
            label=label,
        )
    if kind == "income_absolute":
        return m.IncomeAbsolute(
            selector=_selector_from_json(doc.get("selector")),
            floor=doc.get("floor"), ceiling=doc.get("ceiling"),
            level=doc.get("level", m.TAXPAYER_LEVEL), label=label,
        )
    if kind == "income_tight":
        return m.IncomeTight(
            selector=_selector_from_json(doc.get("selector")),
            level=doc.get("level", m.TAXPAYER_LEVEL), label=label,
        )
    if kind == "rate_bound":
        return m.RateBound(upper=doc.get("upper"), lower=doc.get("lower"),
                           input=doc.get("input"), label=label)
    if kind == "rate_monotone":
        return m.RateMonotone(input=doc.get("input", m.PERSONAL_INCOME), label=label)
    if kind == "budget":
        return m.Budget(direction=doc.get("direction", m.LOSS_AT_MOST),
                        cap=doc.get("cap"), label=label)
    if kind == "mirror":
        return m.Mirror(taxpayer=doc["taxpayer"], mirror=doc["mirror"],
                        cap=doc.get("cap", 0.0), label=label)
    raise ValidationError([f"unknown constraint kind {kind!r}"])


def _objective_to_json(obj) -> dict:
    if isinstance(obj, m.MinComplexity):
        return {"kind": obj.kind, "big_m": obj.big_m, "income_weight": obj.income_weight}
    if isinstance(obj, m.Lexicographic):
        return {"kind": obj.kind, "first": _objective_to_json(obj.first),
                "then": _objective_to_json(obj.then), "slack": obj.slack}
    return {"kind": obj.kind}


def _objective_from_json(doc: dict):
    kind = (doc or {}).get("kind", "feasibility")
    if kind == "feasibility":
        return m.Feasibility()
    if kind == "min_revenue_loss":
        return m.MinRevenueLoss()
    if kind == "min_complexity":
        return m.MinComplexity(big_m=doc.get("big_m"),
                               income_weight=doc.get("income_weight", 2.0))
    if kind == "lexicographic":
        return m.Lexicographic(first=_objective_from_json(doc.get("first", {})),
                               then=_objective_from_json(doc.get("then", {})),
                               slack=doc.get("slack", 0.0))
    raise ValidationError([f"unknown objective kind {kind!r}"])


def reform_to_json(spec: m.ReformSpec) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "name": spec.name,
        "variable_mode": spec.variable_mode,
        "objective": _objective_to_json(spec.objective),
        "constraints": [_constraint_to_json(c) for c in spec.constraints],
        "frozen_rules": {
            rid: vals for rid, vals in spec.frozen_rules.items()
        },
        "support_overrides": {
            k: (list(v) if v is not None else None)
            for k, v in spec.support_overrides.items()
        },
        "merge_dimensions": list(spec.merge_dimensions),
        "rate_bounds": list(spec.rate_bounds),
        "amount_bounds": list(spec.amount_bounds),
        "scale_bounds": list(spec.scale_bounds),
    }


def reform_from_json(document: dict) -> m.ReformSpec:
    _validate(document, REFORM_SCHEMA, "reform")
    return m.ReformSpec(
        name=document.get("name", "reform"),
        constraints=tuple(_constraint_from_json(c) for c in document.get("constraints", [])),
        objective=_objective_from_json(document.get("objective", {})),
        frozen_rules=dict(document.get("frozen_rules", {})),
        support_overrides={
            k: (tuple(v) if v is not None else None)
            for k, v in document.get("support_overrides", {}).items()
        },
        merge_dimensions=tuple(document.get("merge_dimensions", ())),
        variable_mode=document.get("variable_mode", m.RATES_MODE),
        rate_bounds=tuple(document.get("rate_bounds", m.DEFAULT_RATE_BOUNDS)),
        amount_bounds=tuple(document.get("amount_bounds", m.DEFAULT_AMOUNT_BOUNDS)),
        scale_bounds=tuple(document.get("scale_bounds", m.DEFAULT_SCALE_BOUNDS)),
    )


def validate_reform_document(document: dict) -> None:
    _validate(document, REFORM_SCHEMA, "reform")


def validate_code_document(document: dict) -> None:
    _validate(document, TAXCODE_SCHEMA, "tax-code")
