"""Report bundles for solved reforms.

A bundle is one JSON document plus delimited-text extracts: the old and
new rates, per-taxpayer taxes and net incomes, marginal-pressure
series, the weighted budget delta and the active-rule census.  Only
optimal solutions can be reported; anything else refuses loudly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile

import numpy as np

from ..core import subkey_text
from ..errors import TaxOptError
from .population import PERSONAL_INCOME

REPORT_VERSION = 1
DETAIL_CAP = 50_000


def _rates_table(result) -> list[dict]:
    layout = result.compiled.layout
    x = result.x
    try:
        old = layout.canonical_vector()
    except ValueError:
        old = None
    rows = []
    if layout.scale_mode:
        for rule in layout.live_rules:
            rows.append({
                "kind": "scale",
                "name": rule.id,
                "input": rule.input,
                "group": "",
                "old": 1.0,
                "new": float(x[layout.scale_index(rule.id)]),
            })
    for (input_id, subkey), support in sorted(layout.rate_supports.items()):
        for b in range(support.num_brackets):
            lo, hi = support.interval(b)
            if layout.scale_mode:
                terms = layout.bracket_rate_terms(input_id, subkey, b)
                old_rate = sum(terms.values())
                new_rate = sum(x[layout.scale_index(rid)] * rate
                               for rid, rate in terms.items())
            else:
                idx = layout.rate_index(input_id, subkey, b)
                old_rate = None if old is None else float(old[idx])
                new_rate = float(x[idx])
            rows.append({
                "kind": "rate",
                "name": f"{input_id}[{b}]",
                "input": input_id,
                "group": subkey_text(subkey),
                "from": lo,
                "to": None if math.isinf(hi) else hi,
                "old": old_rate,
                "new": new_rate,
            })
    if not layout.scale_mode:
        for var in layout.variables:
            if var.kind == "lump":
                idx = layout.lump_index(var.rule_id, var.label)
                rows.append({
                    "kind": "lump",
                    "name": var.rule_id,
                    "input": "",
                    "group": var.label,
                    "old": None if old is None else float(old[idx]),
                    "new": float(x[idx]),
                })
    return rows


def _taxpayer_rows(result) -> list[dict]:
    compiled = result.compiled
    new_taxes = compiled.taxes(result.x)
    rows = []
    for t, new_tax in zip(compiled.population, new_taxes):
        income = t.inputs.get(PERSONAL_INCOME, 0.0)
        rows.append({
            "taxpayer_id": t.id,
            "household_id": t.household_id,
            "weight": t.weight,
            "income": income,
            "old_tax": t.current_tax,
            "new_tax": float(new_tax),
            "old_net": income - t.current_tax,
            "new_net": income - float(new_tax),
        })
    return rows


def _marginal_series(result, wrt: str = PERSONAL_INCOME) -> list[dict]:
    compiled = result.compiled
    layout = compiled.layout
    code = layout.code
    series = []
    for t in compiled.population:
        if wrt not in t.inputs:
            continue
        old = code.marginal_rate(t.inputs, t.characteristics, wrt)
        new = layout.marginal(t.inputs, t.characteristics, wrt, result.x)
        series.append({
            "taxpayer_id": t.id,
            "income": t.inputs[wrt],
            "old": old,
            "new": float(new),
        })
    return series


def _downsample(rows: list[dict], cap: int) -> list[dict]:
    if len(rows) <= cap:
        return rows
    idx = np.linspace(0, len(rows) - 1, cap).astype(int)
    return [rows[i] for i in idx]


def build_report(result, detail_cap: int = DETAIL_CAP) -> dict:
    """JSON-ready report for an optimal scenario result."""
    if not result.is_optimal:
        raise TaxOptError(
            f"cannot report a {result.status!r} solution"
            + (f" (conflicts: {', '.join(result.conflicts)})" if result.conflicts else "")
        )
    compiled = result.compiled
    census = result.census
    return {
        "version": REPORT_VERSION,
        "name": compiled.spec.name,
        "status": result.status,
        "objective": result.solution.objective,
        "revenue_loss": result.revenue_loss,
        "budget_tolerance": compiled.budget_tolerance,
        "rates": _rates_table(result),
        "taxpayers": _downsample(_taxpayer_rows(result), detail_cap),
        "marginal_series": _downsample(_marginal_series(result), detail_cap),
        "rule_census": census,
        "census_totals": {
            "active": sum(1 for c in census if c["active"]),
            "income_dependent": sum(1 for c in census if c["income_dependent"]),
        },
        "solve_statistics": {
            "iterations": result.solution.iterations,
            "nodes": result.solution.nodes,
            "wall_time": result.solution.wall_time,
        },
    }


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    with os.fdopen(fd, "w") as handle:
        handle.write(text)
    os.replace(tmp, path)


def _csv_text(rows: list[dict]) -> str:
    if not rows:
        return ""
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_report(result, destination, detail_cap: int = DETAIL_CAP) -> dict[str, str]:
    """Write the bundle into a directory; returns the paths written."""
    report = build_report(result, detail_cap)
    destination = os.fspath(destination)
    paths = {
        "report": os.path.join(destination, "report.json"),
        "rates": os.path.join(destination, "rates.csv"),
        "taxpayers": os.path.join(destination, "taxpayers.csv"),
        "marginal": os.path.join(destination, "marginal.csv"),
        "census": os.path.join(destination, "census.csv"),
    }
    _write_atomic(paths["report"], json.dumps(report, indent=2, sort_keys=True) + "\n")
    _write_atomic(paths["rates"], _csv_text(report["rates"]))
    _write_atomic(paths["taxpayers"], _csv_text(report["taxpayers"]))
    _write_atomic(paths["marginal"], _csv_text(report["marginal_series"]))
    _write_atomic(paths["census"], _csv_text(report["rule_census"]))
    return paths


def write_frontier(entries, destination) -> str:
    """Frontier table as CSV (one row per cap)."""
    rows = [
        {
            "cap": e.cap,
            "status": e.status,
            "revenue_loss": e.revenue_loss,
            "active_rules": e.active_rules,
            "conflicts": ";".join(e.conflicts),
        }
        for e in entries
    ]
    path = os.path.join(os.fspath(destination), "frontier.csv")
    _write_atomic(path, _csv_text(rows))
    return path
