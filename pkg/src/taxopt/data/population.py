"""Taxpayer populations: loading, validation and serialization.

The delimited-text schema is one row per taxpayer with the core columns
``taxpayer_id``, ``household_id``, ``weight`` and ``current_tax``.
Every other column is an input when all of its values parse as numbers
and a characteristic otherwise (characteristic values therefore must
not be purely numeric).  The JSON form is explicit about which is
which and round-trips without that inference.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field

from ..errors import ValidationError

SCHEMA_VERSION = 1
CORE_COLUMNS = ("taxpayer_id", "household_id", "weight", "current_tax")
HOUSEHOLD_INCOME = "household_income"
PERSONAL_INCOME = "income_before_tax"


@dataclass(frozen=True)
class Taxpayer:
    id: str
    inputs: dict[str, float]
    characteristics: dict[str, str]
    weight: float
    household_id: str
    current_tax: float

    @property
    def net_income(self) -> float:
        return self.inputs.get(PERSONAL_INCOME, 0.0) - self.current_tax


@dataclass(frozen=True)
class Household:
    id: str
    member_ids: tuple[str, ...]


@dataclass
class Population:
    taxpayers: tuple[Taxpayer, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.taxpayers = tuple(self.taxpayers)
        self._by_id = {t.id: t for t in self.taxpayers}
        grouped: dict[str, list[str]] = {}
        for t in self.taxpayers:
            grouped.setdefault(t.household_id, []).append(t.id)
        self.households = {
            hid: Household(hid, tuple(members)) for hid, members in grouped.items()
        }

    def __len__(self) -> int:
        return len(self.taxpayers)

    def __iter__(self):
        return iter(self.taxpayers)

    def taxpayer(self, taxpayer_id: str) -> Taxpayer:
        return self._by_id[taxpayer_id]

    def members(self, household_id: str) -> list[Taxpayer]:
        return [self._by_id[m] for m in self.households[household_id].member_ids]

    @property
    def num_households(self) -> int:
        return len(self.households)

    def validate(self) -> list[str]:
        """All invariant violations, collected rather than fail-fast."""
        issues = []
        if not self.taxpayers:
            issues.append("no rows")
            return issues
        seen: set[str] = set()
        for t in self.taxpayers:
            if t.id in seen:
                issues.append(f"duplicate taxpayer id {t.id!r}")
            seen.add(t.id)
            if not (t.weight > 0):
                issues.append(f"taxpayer {t.id!r}: non-positive weight {t.weight!r}")
            if not math.isfinite(t.current_tax):
                issues.append(f"taxpayer {t.id!r}: current_tax is not finite")
            for name, value in t.inputs.items():
                if not math.isfinite(value) or value < 0:
                    issues.append(
                        f"taxpayer {t.id!r}: input {name!r} = {value!r} "
                        "must be finite and >= 0"
                    )
        for hid, household in self.households.items():
            members = [self._by_id[m] for m in household.member_ids]
            if any(HOUSEHOLD_INCOME in m.inputs for m in members):
                total = sum(m.inputs.get(PERSONAL_INCOME, 0.0) for m in members)
                for m in members:
                    stated = m.inputs.get(HOUSEHOLD_INCOME)
                    if stated is None:
                        issues.append(
                            f"household {hid!r}: member {m.id!r} lacks {HOUSEHOLD_INCOME}"
                        )
                    elif abs(stated - total) > 1e-6 * max(1.0, abs(total)):
                        issues.append(
                            f"household {hid!r}: {HOUSEHOLD_INCOME} {stated!r} "
                            f"differs from member income sum {total!r}"
                        )
        return issues

    def check(self) -> "Population":
        issues = self.validate()
        if issues:
            raise ValidationError(issues)
        return self


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_population_csv(text: str, provenance: dict | None = None) -> Population:
    """Parse the delimited-text schema; raises ValidationError with every
    problem found rather than the first."""
    reader = csv.DictReader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ValidationError(["no rows"])
    header = reader.fieldnames or []
    issues = [f"missing column {col!r}" for col in ("taxpayer_id", "weight", "current_tax")
              if col not in header]
    if issues:
        raise ValidationError(issues)
    extra = [c for c in header if c not in CORE_COLUMNS]
    numeric_cols = {
        c for c in extra
        if all(_is_number(r[c]) for r in rows if (r[c] or "").strip() != "")
    }
    taxpayers = []
    for lineno, row in enumerate(rows, start=2):
        tid = (row["taxpayer_id"] or "").strip()
        if not tid:
            issues.append(f"line {lineno}: empty taxpayer_id")
            continue
        try:
            weight = float(row["weight"])
            current_tax = float(row["current_tax"])
        except ValueError as exc:
            issues.append(f"line {lineno}: {exc}")
            continue
        inputs: dict[str, float] = {}
        characteristics: dict[str, str] = {}
        for c in extra:
            raw = (row[c] or "").strip()
            if c in numeric_cols:
                inputs[c] = float(raw) if raw else 0.0
            else:
                characteristics[c] = raw
        hid = (row.get("household_id") or "").strip() or tid
        taxpayers.append(Taxpayer(
            id=tid, inputs=inputs, characteristics=characteristics,
            weight=weight, household_id=hid, current_tax=current_tax,
        ))
    if issues:
        raise ValidationError(issues)
    pop = Population(tuple(taxpayers), provenance=dict(provenance or {}))
    return pop.check()


def dump_population_csv(population: Population) -> str:
    input_cols = sorted({k for t in population for k in t.inputs})
    char_cols = sorted({k for t in population for k in t.characteristics})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(CORE_COLUMNS) + input_cols + char_cols)
    for t in population:
        writer.writerow(
            [t.id, t.household_id, repr(t.weight), repr(t.current_tax)]
            + [repr(t.inputs.get(c, 0.0)) for c in input_cols]
            + [t.characteristics.get(c, "") for c in char_cols]
        )
    return buf.getvalue()


def population_to_json(population: Population) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "provenance": population.provenance,
        "taxpayers": [
            {
                "id": t.id,
                "household_id": t.household_id,
                "weight": t.weight,
                "current_tax": t.current_tax,
                "inputs": t.inputs,
                "characteristics": t.characteristics,
            }
            for t in population
        ],
    }


def population_from_json(document: dict) -> Population:
    if document.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ValidationError([f"unsupported population schema version {document.get('version')!r}"])
    taxpayers = []
    issues = []
    for i, row in enumerate(document.get("taxpayers", [])):
        try:
            taxpayers.append(Taxpayer(
                id=str(row["id"]),
                inputs={k: float(v) for k, v in row.get("inputs", {}).items()},
                characteristics={k: str(v) for k, v in row.get("characteristics", {}).items()},
                weight=float(row["weight"]),
                household_id=str(row.get("household_id") or row["id"]),
                current_tax=float(row["current_tax"]),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            issues.append(f"taxpayer #{i}: {exc!r}")
    if issues:
        raise ValidationError(issues)
    return Population(tuple(taxpayers), provenance=dict(document.get("provenance", {}))).check()


def load_population(path) -> Population:
    """Load either schema by file content."""
    with open(path, "r") as handle:
        text = handle.read()
    stripped = text.lstrip()
    provenance = {"source": os.fspath(path)}
    if stripped.startswith("{"):
        doc = json.loads(text)
        pop = population_from_json(doc)
        pop.provenance.setdefault("source", os.fspath(path))
        return pop
    return load_population_csv(text, provenance=provenance)


def save_population(population: Population, path) -> None:
    """Write the delimited-text form atomically (temp file + rename)."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    with os.fdopen(fd, "w") as handle:
        handle.write(dump_population_csv(population))
    os.replace(tmp, path)
