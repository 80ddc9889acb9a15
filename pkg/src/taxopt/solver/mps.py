"""MPS fixed-format export and import.

The writer keeps the classic section layout and fixed field start
columns, one (row, value) pair per COLUMNS line.  Values are printed
with Python's shortest round-tripping float representation so an
import reproduces the problem bit for bit; fields grow to the right
when a name or value needs the room, which whitespace-splitting
readers (including this one) accept.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import SolverError
from .problem import EQUAL, GREATER, LESS, LinearProblem

_SENSE_TO_TAG = {LESS: "L", EQUAL: "E", GREATER: "G"}
_TAG_TO_SENSE = {v: k for k, v in _SENSE_TO_TAG.items()}

OBJECTIVE_ROW = "COST"
_RHS_SET = "RHS"
_BOUND_SET = "BND"


def _num(value: float) -> str:
    return repr(float(value))


def _fields(*parts: str, starts=(1, 4, 14, 24, 39)) -> str:
    """Assemble one record with fields beginning at fixed columns."""
    line = ""
    for text, start in zip(parts, starts):
        if len(line) < start:
            line += " " * (start - len(line))
        elif line:
            line += " "
        line += text
    return line.rstrip()


def write_mps(problem: LinearProblem) -> str:
    """Render a problem as an MPS document (deterministic byte output)."""
    if OBJECTIVE_ROW in problem.row_names:
        raise SolverError(f"row name {OBJECTIVE_ROW!r} is reserved for the objective")
    lines = [f"NAME          {problem.name}"]
    lines.append("ROWS")
    lines.append(_fields("N", OBJECTIVE_ROW))
    for name, sense in zip(problem.row_names, problem.senses):
        lines.append(_fields(_SENSE_TO_TAG[sense], name))
    lines.append("COLUMNS")
    csc = problem.A.tocsc()
    for j, col in enumerate(problem.col_names):
        if problem.c[j] != 0.0:
            lines.append(_fields("", col, OBJECTIVE_ROW, _num(problem.c[j])))
        sl = csc.getcol(j).tocoo()
        for i, v in sorted(zip(sl.row.tolist(), sl.data.tolist())):
            if v != 0.0:
                lines.append(_fields("", col, problem.row_names[i], _num(v)))
    lines.append("RHS")
    for i, name in enumerate(problem.row_names):
        if problem.b[i] != 0.0:
            lines.append(_fields("", _RHS_SET, name, _num(problem.b[i])))
    lines.append("RANGES")
    lines.append("BOUNDS")
    for j, col in enumerate(problem.col_names):
        lo, up = problem.lower[j], problem.upper[j]
        if problem.is_binary[j]:
            lines.append(_fields("BV", _BOUND_SET, col))
            continue
        if lo == up:
            lines.append(_fields("FX", _BOUND_SET, col, _num(lo)))
            continue
        if not np.isfinite(lo):
            lines.append(_fields("MI", _BOUND_SET, col))
        elif lo != 0.0:
            lines.append(_fields("LO", _BOUND_SET, col, _num(lo)))
        if np.isfinite(up):
            lines.append(_fields("UP", _BOUND_SET, col, _num(up)))
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def export_mps(problem: LinearProblem, destination) -> None:
    """Write the MPS document to a path."""
    import os
    import tempfile

    text = write_mps(problem)
    destination = os.fspath(destination)
    directory = os.path.dirname(destination) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    with os.fdopen(fd, "w") as handle:
        handle.write(text)
    os.replace(tmp, destination)


def read_mps(text: str) -> LinearProblem:
    """Parse an MPS document produced by :func:`write_mps` (or compatible)."""
    name = "problem"
    section = None
    row_names: list[str] = []
    senses: list[str] = []
    objective_row = None
    row_index: dict[str, int] = {}
    col_order: list[str] = []
    col_index: dict[str, int] = {}
    entries: list[tuple[int, int, float]] = []
    objective: dict[int, float] = {}
    rhs: dict[int, float] = {}
    bounds: dict[int, list] = {}
    binaries: set[int] = set()
    integer_marker = False

    def col_of(colname: str) -> int:
        if colname not in col_index:
            col_index[colname] = len(col_order)
            col_order.append(colname)
        return col_index[colname]

    for raw in text.splitlines():
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        is_header = raw[0] not in " \t"
        tokens = raw.split()
        if is_header:
            keyword = tokens[0].upper()
            if keyword == "NAME":
                name = tokens[1] if len(tokens) > 1 else "problem"
                continue
            if keyword == "ENDATA":
                break
            if keyword in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
                section = keyword
                continue
            raise SolverError(f"unknown MPS section {keyword!r}")
        if section == "ROWS":
            tag, rowname = tokens[0].upper(), tokens[1]
            if tag == "N":
                if objective_row is not None:
                    raise SolverError("multiple objective rows")
                objective_row = rowname
                continue
            if rowname in row_index:
                raise SolverError(f"duplicate row name {rowname!r}")
            row_index[rowname] = len(row_names)
            row_names.append(rowname)
            senses.append(_TAG_TO_SENSE[tag])
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                integer_marker = tokens[2] == "'INTORG'"
                continue
            colname = tokens[0]
            j = col_of(colname)
            if integer_marker:
                binaries.add(j)
            pairs = tokens[1:]
            if len(pairs) % 2:
                raise SolverError(f"odd COLUMNS record: {raw!r}")
            for rowname, value in zip(pairs[::2], pairs[1::2]):
                v = float(value)
                if rowname == objective_row:
                    objective[j] = objective.get(j, 0.0) + v
                elif rowname in row_index:
                    entries.append((row_index[rowname], j, v))
                else:
                    raise SolverError(f"COLUMNS references unknown row {rowname!r}")
        elif section == "RHS":
            pairs = tokens[1:]
            for rowname, value in zip(pairs[::2], pairs[1::2]):
                if rowname == objective_row:
                    continue
                rhs[row_index[rowname]] = float(value)
        elif section == "RANGES":
            raise SolverError("RANGES entries are not supported")
        elif section == "BOUNDS":
            tag = tokens[0].upper()
            colname = tokens[2]
            j = col_of(colname)
            value = float(tokens[3]) if len(tokens) > 3 else None
            bounds.setdefault(j, []).append((tag, value))
        else:
            raise SolverError(f"data outside any section: {raw!r}")

    m, n = len(row_names), len(col_order)
    if entries:
        rows, cols, vals = zip(*entries)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    else:
        A = sp.csr_matrix((m, n))
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    is_binary = np.zeros(n, dtype=bool)
    for j in binaries:
        is_binary[j] = True
        upper[j] = 1.0
    for j, specs in bounds.items():
        for tag, value in specs:
            if tag == "UP":
                upper[j] = value
            elif tag == "LO":
                lower[j] = value
            elif tag == "FX":
                lower[j] = upper[j] = value
            elif tag == "MI":
                lower[j] = -np.inf
            elif tag == "PL":
                upper[j] = np.inf
            elif tag == "FR":
                lower[j], upper[j] = -np.inf, np.inf
            elif tag == "BV":
                is_binary[j] = True
                lower[j], upper[j] = 0.0, 1.0
            else:
                raise SolverError(f"unsupported bound tag {tag!r}")
    c = np.zeros(n)
    for j, v in objective.items():
        c[j] = v
    b = np.zeros(m)
    for i, v in rhs.items():
        b[i] = v
    return LinearProblem(
        c=c, A=A, senses=senses, b=b, lower=lower, upper=upper,
        is_binary=is_binary, row_names=row_names, col_names=col_order, name=name,
    )


def import_mps(path) -> LinearProblem:
    with open(path, "r") as handle:
        return read_mps(handle.read())
