"""Piecewise-linear tax-code algebra.

A tax code is a set of single-input, piecewise-linear tax rules plus the
group dimensions that decide which variant of each rule applies to a
taxpayer.  Everything in this module is immutable after construction and
evaluation is pure, so codes can be shared freely across threads.

Two evaluation paths exist on purpose:

* rule-by-rule with each rule's own stored parameters (the "current
  system"), and
* against a :class:`RateLayout`, the merged per-group parameterization
  whose entries are the solver variables of a reform.

The two must agree whenever the layout is filled with the canonical
projection of the current parameters; tests lean on that redundancy.
"""

from __future__ import annotations

import math

import numpy as np
from bisect import bisect_left
from dataclasses import dataclass, field, replace

from .errors import (
    DomainError,
    GroupResolutionError,
    MissingCharacteristicError,
    MissingInputError,
    TaxOptError,
)

InputVector = dict[str, float]
Characteristics = dict[str, str]

# Group-key fragment relevant to one input: ((dimension, label), ...).
SubKey = tuple[tuple[str, str], ...]

UNGROUPED = "all"


def _check_cutoffs(cutoffs) -> tuple[float, ...]:
    out = tuple(float(c) for c in cutoffs)
    prev = 0.0
    for c in out:
        if not math.isfinite(c):
            raise ValueError(f"cutoff {c!r} is not finite")
        if c <= prev:
            raise ValueError(f"cutoffs must be strictly increasing and > 0, got {out}")
        prev = c
    return out


@dataclass(frozen=True)
class Support:
    """Ordered cutoff points of one input.

    An implicit cutoff at 0 precedes the first entry and the final
    bracket is unbounded above, so ``len(cutoffs) + 1`` brackets exist.
    """

    input: str
    cutoffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "cutoffs", _check_cutoffs(self.cutoffs))

    @property
    def num_brackets(self) -> int:
        return len(self.cutoffs) + 1

    def bracketize(self, x: float) -> list[float]:
        """Split ``x`` into the amount falling inside each bracket.

        The entries always sum to ``x``; the unbounded final bracket
        absorbs whatever exceeds the last cutoff.
        """
        if not math.isfinite(x) or x < 0:
            raise DomainError(f"bracketize needs a finite non-negative value, got {x!r}")
        out = []
        lo = 0.0
        for hi in self.cutoffs:
            out.append(min(max(x - lo, 0.0), hi - lo))
            lo = hi
        out.append(max(x - lo, 0.0))
        return out

    def active_bracket(self, x: float) -> int:
        """Bracket whose marginal rate applies at ``x``.

        Exactly on a cutoff the lower bracket wins (brackets are
        right-continuous, the marginal rate left-continuous).
        """
        if not math.isfinite(x) or x < 0:
            raise DomainError(f"active_bracket needs a finite non-negative value, got {x!r}")
        return bisect_left(self.cutoffs, x)

    def interval(self, b: int) -> tuple[float, float]:
        lo = self.cutoffs[b - 1] if b > 0 else 0.0
        hi = self.cutoffs[b] if b < len(self.cutoffs) else math.inf
        return lo, hi


def bracketize(x: float, support: Support) -> list[float]:
    return support.bracketize(x)


def merge_cutoffs(*cutoff_lists) -> tuple[float, ...]:
    """Sorted, deduplicated union of several cutoff lists."""
    merged: set[float] = set()
    for cl in cutoff_lists:
        merged.update(float(c) for c in cl)
    return tuple(sorted(merged))


def merge_supports(rules, group_label: str, input_id: str) -> Support:
    """Union of the cutoffs of every rule schedule applying to a group."""
    lists = []
    for rule in rules:
        if rule.input != input_id:
            continue
        sched = rule.schedules.get(group_label) or rule.schedules.get(UNGROUPED)
        if sched is not None:
            lists.append(sched.support.cutoffs)
    return Support(input_id, merge_cutoffs(*lists))


@dataclass(frozen=True)
class GroupDimension:
    """One axis along which tax treatment may differ.

    ``groups`` maps a group label to the characteristic values that
    select it; the value sets must be disjoint and cover every value a
    population may carry.
    """

    name: str
    characteristic: str
    groups: dict[str, tuple[str, ...]]

    def __post_init__(self):
        seen: dict[str, str] = {}
        for label, values in self.groups.items():
            for v in values:
                if v in seen:
                    raise ValueError(
                        f"dimension {self.name!r}: value {v!r} maps to both "
                        f"{seen[v]!r} and {label!r}"
                    )
                seen[v] = label

    def label_for(self, characteristics: Characteristics, taxpayer_id=None) -> str:
        if self.characteristic not in characteristics:
            raise MissingCharacteristicError(self.characteristic, taxpayer_id)
        value = characteristics[self.characteristic]
        for label, values in self.groups.items():
            if value in values:
                return label
        raise GroupResolutionError(self.name, value)

    @classmethod
    def identity(cls, name: str, values: tuple[str, ...]) -> "GroupDimension":
        """Dimension whose labels are the characteristic values themselves."""
        return cls(name, name, {v: (v,) for v in values})


def assign_group(characteristics: Characteristics, dimensions) -> tuple[str, ...]:
    """Full group key of a taxpayer: one label per dimension, in order."""
    return tuple(d.label_for(characteristics) for d in dimensions)


@dataclass(frozen=True)
class RuleSchedule:
    """One group's parameters for a rule: cutoffs, per-bracket rates, lump sum."""

    support: Support
    rates: tuple[float, ...]
    lump_sum: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if len(self.rates) != self.support.num_brackets:
            raise ValueError(
                f"{len(self.rates)} rates for {self.support.num_brackets} brackets "
                f"on {self.support.input!r}"
            )

    def amount(self, x: float) -> float:
        pieces = self.support.bracketize(x)
        return self.lump_sum + sum(r * p for r, p in zip(self.rates, pieces))

    def rate_at(self, x: float) -> float:
        return self.rates[self.support.active_bracket(x)]


BRACKET = "bracket"
BENEFIT = "benefit"
INPUT_DEDUCTION = "input_deduction"
TAX_CREDIT = "tax_credit"

_RULE_KINDS = (BRACKET, BENEFIT, INPUT_DEDUCTION, TAX_CREDIT)


@dataclass(frozen=True)
class TaxRule:
    """A single tax rule.

    ``schedules`` is keyed by the label of the ``varies_by`` dimension,
    or by :data:`UNGROUPED` when the rule does not vary across groups.
    ``eligibility`` restricts who the rule applies to at all; taxpayers
    outside it contribute zero.  Deductible kinds carry ``amount`` (and
    ``references`` for tax credits) and are rewritten into equivalent
    bracket/benefit rules when a :class:`TaxCode` is built.
    """

    id: str
    kind: str
    input: str
    schedules: dict[str, RuleSchedule] = field(default_factory=dict)
    varies_by: str | None = None
    eligibility: dict[str, tuple[str, ...]] | None = None
    frozen: bool = False
    tie_rates: bool = False
    topic: str = ""
    amount: float = 0.0
    references: str | None = None
    source_kind: str | None = None

    def __post_init__(self):
        if self.kind not in _RULE_KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.kind == BRACKET:
            for label, sched in self.schedules.items():
                if sched.lump_sum != 0.0:
                    raise ValueError(f"bracket rule {self.id!r} ({label}) carries a lump sum")
        if self.kind == TAX_CREDIT and not self.references:
            raise ValueError(f"tax credit {self.id!r} must reference a rule")
        if self.kind in (INPUT_DEDUCTION, TAX_CREDIT) and self.amount <= 0:
            raise ValueError(f"deductible {self.id!r} needs a positive amount")
        if self.varies_by is None:
            extra = set(self.schedules) - {UNGROUPED}
            if extra:
                raise ValueError(
                    f"rule {self.id!r} has labelled schedules {sorted(extra)} "
                    "but no varies_by dimension"
                )

    @property
    def has_lump_sum(self) -> bool:
        return any(s.lump_sum != 0.0 for s in self.schedules.values())

    def schedule_for(self, label: str) -> RuleSchedule | None:
        if self.varies_by is None:
            return self.schedules.get(UNGROUPED)
        return self.schedules.get(label)


def _shift_for_deduction(rule: TaxRule) -> TaxRule:
    """Rewrite an input-reducing deductible as a shifted bracket rule.

    Taxing ``max(x - D, 0)`` on cutoffs ``c`` equals taxing ``x`` on
    cutoffs ``[D, c1 + D, ...]`` with a zero-rate opening bracket.
    """
    schedules = {}
    for label, sched in rule.schedules.items():
        cutoffs = (rule.amount,) + tuple(c + rule.amount for c in sched.support.cutoffs)
        rates = (0.0,) + sched.rates
        schedules[label] = RuleSchedule(Support(rule.input, cutoffs), rates, sched.lump_sum)
    kind = BENEFIT if rule.has_lump_sum else BRACKET
    return replace(rule, kind=kind, schedules=schedules, amount=0.0, source_kind=INPUT_DEDUCTION)


def _negate_for_credit(rule: TaxRule, target: TaxRule) -> TaxRule:
    """Rewrite a tax-crediting deductible as negative brackets on [0, D].

    The credit cancels the taxes the referenced rule levies on the
    first ``D`` units of its input; lump sums are not credited.
    """
    schedules = {}
    labels = rule.schedules or target.schedules or {UNGROUPED: None}
    for label in labels:
        sched = target.schedule_for(label) or target.schedules.get(UNGROUPED)
        if sched is None:
            raise ValueError(
                f"tax credit {rule.id!r}: referenced rule {target.id!r} has no "
                f"schedule for group {label!r}"
            )
        cutoffs = [c for c in sched.support.cutoffs if c < rule.amount]
        rates = [-sched.rates[i] for i in range(len(cutoffs) + 1)]
        cutoffs.append(rule.amount)
        rates.append(0.0)
        schedules[label] = RuleSchedule(Support(rule.input, tuple(cutoffs)), tuple(rates))
    varies_by = rule.varies_by if rule.varies_by is not None else target.varies_by
    if set(schedules) == {UNGROUPED}:
        varies_by = None
    return replace(
        rule,
        kind=BRACKET,
        input=target.input,
        schedules=schedules,
        varies_by=varies_by,
        amount=0.0,
        references=None,
        source_kind=TAX_CREDIT,
    )


def normalize_rules(rules) -> list[TaxRule]:
    """Compile deductibles away so only bracket/benefit rules remain."""
    by_id = {r.id: r for r in rules}
    if len(by_id) != len(list(rules)):
        raise ValueError("duplicate rule ids")
    shifted = {
        r.id: _shift_for_deduction(r) if r.kind == INPUT_DEDUCTION else r for r in rules
    }
    out = []
    for rule in shifted.values():
        if rule.kind == TAX_CREDIT:
            if rule.references not in shifted:
                raise ValueError(f"tax credit {rule.id!r} references unknown rule {rule.references!r}")
            target = shifted[rule.references]
            if target.kind == TAX_CREDIT:
                raise ValueError(f"tax credit {rule.id!r} may not reference another credit")
            rule = _negate_for_credit(rule, target)
        out.append(rule)
    return out


@dataclass(frozen=True)
class InputInfo:
    """Metadata for one tax-relevant input."""

    unit: str = "currency"  # "currency" or "count"
    income_like: bool = False


@dataclass(frozen=True)
class TaxCode:
    """A complete tax code: rules plus the group dimensions they live on."""

    name: str
    rules: tuple[TaxRule, ...]
    dimensions: tuple[GroupDimension, ...] = ()
    inputs: dict[str, InputInfo] = field(default_factory=dict)
    comovements: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(normalize_rules(self.rules)))
        dim_names = {d.name for d in self.dimensions}
        if len(dim_names) != len(self.dimensions):
            raise ValueError("duplicate dimension names")
        char_to_dim = {d.characteristic: d.name for d in self.dimensions}
        inputs = dict(self.inputs)
        for rule in self.rules:
            inputs.setdefault(rule.input, InputInfo())
            if rule.varies_by is not None and rule.varies_by not in dim_names:
                raise ValueError(f"rule {rule.id!r} varies by unknown dimension {rule.varies_by!r}")
            for char in rule.eligibility or {}:
                if char not in char_to_dim:
                    raise ValueError(
                        f"rule {rule.id!r} is eligible on characteristic {char!r} "
                        "which no group dimension covers"
                    )
        object.__setattr__(self, "inputs", inputs)
        for derived, base in self.comovements.items():
            if derived not in inputs or base not in inputs:
                raise ValueError(f"comovement {derived!r} -> {base!r} names unknown inputs")

    # -- groups ------------------------------------------------------------

    def group_key(self, characteristics: Characteristics, taxpayer_id=None) -> tuple[str, ...]:
        return tuple(d.label_for(characteristics, taxpayer_id) for d in self.dimensions)

    def dimension(self, name: str) -> GroupDimension:
        for d in self.dimensions:
            if d.name == name:
                return d
        raise KeyError(name)

    def is_eligible(self, rule: TaxRule, characteristics: Characteristics) -> bool:
        for char, allowed in (rule.eligibility or {}).items():
            if char not in characteristics:
                raise MissingCharacteristicError(char)
            if characteristics[char] not in allowed:
                return False
        return True

    def rule_label(self, rule: TaxRule, characteristics: Characteristics) -> str:
        if rule.varies_by is None:
            return UNGROUPED
        return self.dimension(rule.varies_by).label_for(characteristics)

    def rule_by_id(self, rule_id: str) -> TaxRule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    # -- evaluation with stored (current) parameters ------------------------

    def rule_pressure(self, rule: TaxRule, inputs: InputVector,
                      characteristics: Characteristics) -> float:
        """Absolute tax pressure of one rule for one taxpayer."""
        if not self.is_eligible(rule, characteristics):
            return 0.0
        if rule.input not in inputs:
            raise MissingInputError(rule.input)
        sched = rule.schedule_for(self.rule_label(rule, characteristics))
        if sched is None:
            raise TaxOptError(
                f"rule {rule.id!r} has no schedule for this taxpayer's group"
            )
        return sched.amount(inputs[rule.input])

    def total_tax(self, inputs: InputVector, characteristics: Characteristics) -> float:
        """Total absolute pressure under the currently stored parameters."""
        self.group_key(characteristics)  # fail early on unresolvable groups
        return sum(self.rule_pressure(r, inputs, characteristics) for r in self.rules)

    def marginal_rate(self, inputs: InputVector, characteristics: Characteristics,
                      wrt: str) -> float:
        """Marginal pressure with respect to one input, current parameters.

        Inputs that co-move with ``wrt`` (a unit of personal income also
        raises household income by a unit) contribute their own active
        rates on top.
        """
        targets = {wrt} | {d for d, base in self.comovements.items() if base == wrt}
        total = 0.0
        for rule in self.rules:
            if rule.input not in targets:
                continue
            if not self.is_eligible(rule, characteristics):
                continue
            if rule.input not in inputs:
                raise MissingInputError(rule.input)
            sched = rule.schedule_for(self.rule_label(rule, characteristics))
            if sched is not None:
                total += sched.rate_at(inputs[rule.input])
        return total

    # -- census ------------------------------------------------------------

    def is_income_dependent(self, rule: TaxRule) -> bool:
        """True when the rule's pressure varies with an income-like input."""
        info = self.inputs.get(rule.input)
        if info is None or not info.income_like:
            return False
        return any(any(r != 0.0 for r in s.rates) for s in rule.schedules.values())


# ---------------------------------------------------------------------------
# Merged parameterization (the solver-variable space)
# ---------------------------------------------------------------------------

RATE = "rate"
LUMP = "lump"
SCALE = "scale"


@dataclass(frozen=True)
class Variable:
    """One solver variable of a reform."""

    kind: str  # RATE, LUMP or SCALE
    name: str
    input: str | None = None
    subkey: SubKey = ()
    bracket: int | None = None
    rule_id: str | None = None
    label: str | None = None


def subkey_text(subkey: SubKey) -> str:
    if not subkey:
        return UNGROUPED
    return "|".join(f"{dim}={label}" for dim, label in subkey)


@dataclass
class RateSet:
    """Values for every live coefficient of a tax function.

    ``rates`` is keyed by ``(input, subkey, bracket)``, ``lumps`` by
    ``(rule id, label)`` and ``scales`` by rule id.  ``provenance``
    names the tax code the layout was derived from.
    """

    rates: dict[tuple[str, SubKey, int], float] = field(default_factory=dict)
    lumps: dict[tuple[str, str], float] = field(default_factory=dict)
    scales: dict[str, float] = field(default_factory=dict)
    provenance: str = ""


class RateLayout:
    """Live-variable structure of a code under a reform's restrictions.

    Rates live on the merged support of the non-frozen rules, per
    ``(input, subgroup)`` where the subgroup keeps only the dimensions
    that actually matter for that input.  Lump sums stay attached to
    their rule.  In ``scale_mode`` the layout instead exposes one
    scalar per live rule that multiplies the rule's current function.
    """

    def __init__(self, code: TaxCode, frozen_ids=frozenset(), support_overrides=None,
                 merged_dims=frozenset(), scale_mode: bool = False):
        self.code = code
        self.frozen_ids = frozenset(frozen_ids) | {r.id for r in code.rules if r.frozen}
        unknown = self.frozen_ids - {r.id for r in code.rules}
        if unknown:
            raise KeyError(f"cannot freeze unknown rules {sorted(unknown)}")
        self.support_overrides = dict(support_overrides or {})
        self.merged_dims = frozenset(merged_dims)
        self.scale_mode = scale_mode
        self.live_rules = tuple(r for r in code.rules if r.id not in self.frozen_ids)
        self.frozen_rules = tuple(r for r in code.rules if r.id in self.frozen_ids)
        self.variables: list[Variable] = []
        self._index: dict[tuple, int] = {}
        self._build_structure()
        if scale_mode:
            self._build_scales()
        else:
            self._build_rates()

    # -- construction -------------------------------------------------------

    def _dims_for_input(self, input_id: str) -> tuple[GroupDimension, ...]:
        char_to_dim = {d.characteristic: d for d in self.code.dimensions}
        names: set[str] = set()
        for rule in self.live_rules:
            if rule.input != input_id:
                continue
            if rule.varies_by is not None:
                names.add(rule.varies_by)
            for char in rule.eligibility or {}:
                names.add(char_to_dim[char].name)
        names -= self.merged_dims
        return tuple(d for d in self.code.dimensions if d.name in names)

    def _subkeys_for(self, dims) -> list[SubKey]:
        keys: list[SubKey] = [()]
        for dim in dims:
            keys = [k + ((dim.name, label),) for k in keys for label in sorted(dim.groups)]
        return keys

    def _merged_cutoffs(self, input_id: str, subkey: SubKey) -> tuple[float, ...] | None:
        if input_id in self.support_overrides:
            override = self.support_overrides[input_id]
            if override is None:
                return None
            return _check_cutoffs(override)
        labels = dict(subkey)
        lists = []
        for rule in self.live_rules:
            if rule.input != input_id:
                continue
            if not self._rule_matches_subkey(rule, labels):
                continue
            if rule.varies_by is not None and rule.varies_by in labels:
                sched = rule.schedules.get(labels[rule.varies_by])
            elif rule.varies_by is not None:
                # Merged dimension: every variant's cutoffs stay available.
                lists.extend(s.support.cutoffs for s in rule.schedules.values())
                continue
            else:
                sched = rule.schedules.get(UNGROUPED)
            if sched is not None:
                lists.append(sched.support.cutoffs)
        return merge_cutoffs(*lists)

    def _tied(self, input_id: str) -> bool:
        rules = [r for r in self.live_rules if r.input == input_id]
        return bool(rules) and all(r.tie_rates for r in rules)

    def _build_structure(self):
        """Merged supports and relevant dimensions per live input.

        Computed in both modes: rate variables live on this structure,
        and scale mode needs it to express effective marginal rates.
        """
        self.rate_supports: dict[tuple[str, SubKey], Support] = {}
        self.tied_inputs: set[str] = set()
        self.input_dims: dict[str, tuple[GroupDimension, ...]] = {}
        for input_id in sorted({r.input for r in self.live_rules}):
            dims = self._dims_for_input(input_id)
            self.input_dims[input_id] = dims
            if self._tied(input_id):
                self.tied_inputs.add(input_id)
            for subkey in self._subkeys_for(dims):
                cutoffs = self._merged_cutoffs(input_id, subkey)
                if cutoffs is None:
                    continue
                self.rate_supports[(input_id, subkey)] = Support(input_id, cutoffs)

    def _build_rates(self):
        entries = []
        for (input_id, subkey), support in self.rate_supports.items():
            tied = input_id in self.tied_inputs
            brackets = [0] if tied else range(support.num_brackets)
            for b in brackets:
                entries.append((subkey, input_id, b))
        entries.sort(key=lambda e: (subkey_text(e[0]), e[1], e[2]))
        for subkey, input_id, b in entries:
            name = f"r__{input_id}__{subkey_text(subkey)}__b{b}"
            self._add(Variable(RATE, name, input=input_id, subkey=subkey, bracket=b),
                      (RATE, input_id, subkey, b))
        lump_entries = set()
        for rule in self.live_rules:
            if rule.kind != BENEFIT:
                continue
            for label in rule.schedules:
                lump_entries.add((rule.id, self._lump_label(rule, label)))
        for rule_id, label in sorted(lump_entries):
            name = f"z__{rule_id}__{label}"
            self._add(Variable(LUMP, name, rule_id=rule_id, label=label),
                      (LUMP, rule_id, label))

    def _lump_label(self, rule: TaxRule, label: str) -> str:
        if rule.varies_by is not None and rule.varies_by in self.merged_dims:
            return UNGROUPED
        return label

    def _build_scales(self):
        for rule in sorted(self.live_rules, key=lambda r: r.id):
            self._add(Variable(SCALE, f"s__{rule.id}", rule_id=rule.id, input=rule.input),
                      (SCALE, rule.id))

    def _add(self, var: Variable, key: tuple):
        self._index[key] = len(self.variables)
        self.variables.append(var)

    # -- lookups -------------------------------------------------------------

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    def variable_names(self) -> list[str]:
        return [v.name for v in self.variables]

    def rate_index(self, input_id: str, subkey: SubKey, bracket: int) -> int:
        if input_id in self.tied_inputs:
            bracket = 0
        return self._index[(RATE, input_id, subkey, bracket)]

    def lump_index(self, rule_id: str, label: str) -> int:
        return self._index[(LUMP, rule_id, label)]

    def scale_index(self, rule_id: str) -> int:
        return self._index[(SCALE, rule_id)]

    def subkey_of(self, input_id: str, characteristics: Characteristics) -> SubKey:
        if self.scale_mode:
            return ()
        dims = self.input_dims.get(input_id, ())
        return tuple((d.name, d.label_for(characteristics)) for d in dims)

    # -- per-taxpayer structure ----------------------------------------------

    def frozen_constant(self, inputs: InputVector, characteristics: Characteristics) -> float:
        return sum(self.code.rule_pressure(r, inputs, characteristics)
                   for r in self.frozen_rules)

    def coefficients(self, inputs: InputVector, characteristics: Characteristics) -> dict[int, float]:
        """Sparse row mapping variable index -> coefficient for one taxpayer."""
        out: dict[int, float] = {}
        if self.scale_mode:
            for rule in self.live_rules:
                value = self.code.rule_pressure(rule, inputs, characteristics)
                if value != 0.0:
                    out[self.scale_index(rule.id)] = value
            return out
        for rule in self.live_rules:
            if rule.input not in inputs:
                raise MissingInputError(rule.input)
            if rule.kind == BENEFIT and self.code.is_eligible(rule, characteristics):
                label = self.code.rule_label(rule, characteristics)
                if rule.schedule_for(label) is not None:
                    idx = self.lump_index(rule.id, self._lump_label(rule, label))
                    out[idx] = out.get(idx, 0.0) + 1.0
        for input_id in self.input_dims:
            subkey = self.subkey_of(input_id, characteristics)
            support = self.rate_supports.get((input_id, subkey))
            if support is None:
                continue
            x = inputs[input_id]
            if input_id in self.tied_inputs:
                if x != 0.0:
                    out[self.rate_index(input_id, subkey, 0)] = x
            else:
                for b, piece in enumerate(support.bracketize(x)):
                    if piece != 0.0:
                        out[self.rate_index(input_id, subkey, b)] = piece
        return out

    # -- evaluation against a vector or RateSet -------------------------------

    def evaluate(self, inputs: InputVector, characteristics: Characteristics,
                 vector) -> float:
        """Total pressure at the given variable values (plus frozen constants)."""
        total = self.frozen_constant(inputs, characteristics)
        for idx, coeff in self.coefficients(inputs, characteristics).items():
            total += coeff * vector[idx]
        return total

    def marginal(self, inputs: InputVector, characteristics: Characteristics,
                 wrt: str, vector) -> float:
        targets = {wrt} | {d for d, base in self.code.comovements.items() if base == wrt}
        total = 0.0
        for rule in self.frozen_rules:
            if rule.input in targets and self.code.is_eligible(rule, characteristics):
                sched = rule.schedule_for(self.code.rule_label(rule, characteristics))
                if sched is not None:
                    total += sched.rate_at(inputs[rule.input])
        if self.scale_mode:
            for rule in self.live_rules:
                if rule.input in targets and self.code.is_eligible(rule, characteristics):
                    sched = rule.schedule_for(self.code.rule_label(rule, characteristics))
                    if sched is not None:
                        total += vector[self.scale_index(rule.id)] * sched.rate_at(inputs[rule.input])
            return total
        for input_id in self.input_dims:
            if input_id not in targets:
                continue
            subkey = self.subkey_of(input_id, characteristics)
            support = self.rate_supports.get((input_id, subkey))
            if support is None:
                continue
            b = support.active_bracket(inputs[input_id])
            total += vector[self.rate_index(input_id, subkey, b)]
        return total

    def bracket_rate_terms(self, input_id: str, subkey: SubKey, bracket: int) -> dict[str, float]:
        """Current per-rule rates on one merged bracket, keyed by rule id."""
        support = self.rate_supports[(input_id, subkey)]
        lo, hi = support.interval(bracket)
        probe = lo + 1.0 if math.isinf(hi) else (lo + hi) / 2.0
        labels = dict(subkey)
        terms: dict[str, float] = {}
        for rule in self.live_rules:
            if rule.input != input_id:
                continue
            if not self._rule_matches_subkey(rule, labels):
                continue
            sched = self._sched_for_subkey(rule, labels)
            if sched is not None:
                terms[rule.id] = sched.rate_at(probe)
        return terms

    def canonical_vector(self):
        """Project the code's current parameters onto the live variables.

        Rates on a merged bracket are the sum of the member rules' rates
        on the segment containing it; lump sums carry over unchanged.
        Scale mode is all ones.  Raises if a support override made the
        current parameters unrepresentable.
        """
        vec = np.zeros(self.num_variables)
        if self.scale_mode:
            for rule in self.live_rules:
                vec[self.scale_index(rule.id)] = 1.0
            return vec
        for (input_id, subkey), support in self.rate_supports.items():
            for b in range(support.num_brackets):
                rate = sum(self.bracket_rate_terms(input_id, subkey, b).values())
                if input_id in self.tied_inputs:
                    if b == 0:
                        vec[self.rate_index(input_id, subkey, 0)] = rate
                    elif abs(rate - vec[self.rate_index(input_id, subkey, 0)]) > 1e-9:
                        raise ValueError(
                            f"input {input_id!r} is tied but current rates differ across brackets"
                        )
                else:
                    vec[self.rate_index(input_id, subkey, b)] = rate
        for rule in self.live_rules:
            if rule.kind != BENEFIT:
                continue
            if rule.varies_by is not None and rule.varies_by in self.merged_dims:
                sums = {s.lump_sum for s in rule.schedules.values()}
                if len(sums) > 1:
                    raise ValueError(
                        f"rule {rule.id!r} varies along a merged dimension with "
                        "differing lump sums; the current system is not representable"
                    )
                vec[self.lump_index(rule.id, UNGROUPED)] = sums.pop()
                continue
            for label, sched in rule.schedules.items():
                vec[self.lump_index(rule.id, label)] = sched.lump_sum
        return vec

    def _rule_matches_subkey(self, rule: TaxRule, labels: dict[str, str]) -> bool:
        # Eligibility restricted to a dimension that the subkey pins down.
        char_to_dim = {d.characteristic: d for d in self.code.dimensions}
        for char, allowed in (rule.eligibility or {}).items():
            dim = char_to_dim[char]
            if dim.name not in labels:
                continue
            allowed_labels = {dim.label_for({char: v}) for v in allowed}
            if labels[dim.name] not in allowed_labels:
                return False
        return True

    def _sched_for_subkey(self, rule: TaxRule, labels: dict[str, str]) -> RuleSchedule | None:
        if rule.varies_by is None:
            return rule.schedules.get(UNGROUPED)
        if rule.varies_by in labels:
            return rule.schedules.get(labels[rule.varies_by])
        # Dimension merged away: only a rule whose variants agree has a
        # well-defined per-bracket rate here.
        schedules = list(rule.schedules.values())
        if all(s == schedules[0] for s in schedules[1:]):
            return schedules[0]
        raise ValueError(
            f"rule {rule.id!r} varies along a merged dimension with differing "
            "schedules; its current rates are not representable"
        )

    def to_rate_set(self, vector) -> RateSet:
        rs = RateSet(provenance=self.code.name)
        for i, var in enumerate(self.variables):
            value = float(vector[i])
            if var.kind == RATE:
                if var.input in self.tied_inputs:
                    support = self.rate_supports[(var.input, var.subkey)]
                    for b in range(support.num_brackets):
                        rs.rates[(var.input, var.subkey, b)] = value
                else:
                    rs.rates[(var.input, var.subkey, var.bracket)] = value
            elif var.kind == LUMP:
                rs.lumps[(var.rule_id, var.label)] = value
            else:
                rs.scales[var.rule_id] = value
        return rs

    def from_rate_set(self, rates: RateSet):
        vec = np.zeros(self.num_variables)
        for i, var in enumerate(self.variables):
            if var.kind == RATE:
                vec[i] = rates.rates[(var.input, var.subkey, var.bracket)]
            elif var.kind == LUMP:
                vec[i] = rates.lumps[(var.rule_id, var.label)]
            else:
                vec[i] = rates.scales[var.rule_id]
        return vec


def evaluate_code(code: TaxCode, rates: RateSet | None, inputs: InputVector,
                  characteristics: Characteristics, layout: RateLayout | None = None) -> float:
    """Total absolute pressure, either at current parameters or a RateSet."""
    if rates is None:
        return code.total_tax(inputs, characteristics)
    layout = layout or RateLayout(code, scale_mode=bool(rates.scales))
    return layout.evaluate(inputs, characteristics, layout.from_rate_set(rates))


def marginal_pressure(code: TaxCode, rates: RateSet | None, inputs: InputVector,
                      characteristics: Characteristics, wrt: str,
                      layout: RateLayout | None = None) -> float:
    """Marginal pressure with respect to one input (co-moving inputs included)."""
    if rates is None:
        return code.marginal_rate(inputs, characteristics, wrt)
    layout = layout or RateLayout(code, scale_mode=bool(rates.scales))
    return layout.marginal(inputs, characteristics, wrt, layout.from_rate_set(rates))
