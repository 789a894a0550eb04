"""MPS (free and fixed) and LP-text writers, and an MPS reader.

Output is byte-stable: columns and rows keep model order and every number
is written with ``repr`` precision so a write/read cycle is exact.
"""

from __future__ import annotations

import math
import os
from typing import Iterable

import numpy as np

from padplan.model import MilpModel, ModelError
from padplan.network import atomic_write

FORMATS = ("mps", "fixed-mps", "lp")
_SENSE_CODE = {"<=": "L", ">=": "G", "=": "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}
OBJ_ROW = "COST"


class MpsError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def _num(v: float) -> str:
    v = float(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _fixed_num(v: float) -> str:
    """Shortest text of at most 12 characters that reads back exactly,
    falling back to full precision when no such text exists."""
    text = _num(v)
    if len(text) <= 12:
        return text
    for digits in range(12, 5, -1):
        cand = f"{float(v):.{digits}g}"
        if len(cand) <= 12 and float(cand) == float(v):
            return cand
    return text


# -- MPS writing -------------------------------------------------------------


def _bound_lines(model: MilpModel, names: list[str]) -> Iterable[tuple[str, str, float | None]]:
    for j, name in enumerate(names):
        lo, hi, integer = model.lower[j], model.upper[j], model.integer[j]
        if integer and lo == 0.0 and hi == 1.0:
            yield "BV", name, None
            continue
        if lo == hi:
            yield "FX", name, lo
            continue
        if lo == -math.inf and hi == math.inf:
            yield "FR", name, None
            continue
        if lo == -math.inf:
            yield "MI", name, None
        elif lo != 0.0 or integer:
            yield "LO", name, lo
        if hi != math.inf:
            yield "UP", name, hi
        elif integer:
            yield "PL", name, None


def write_mps(model: MilpModel, fixed: bool = False) -> str:
    """MPS text; ``fixed`` uses fixed columns and positional names C#/R#."""
    model.validate()
    n, m = model.num_vars, model.num_constraints
    if fixed:
        cnames = [f"C{j + 1:07d}" for j in range(n)]
        rnames = [f"R{i + 1:07d}" for i in range(m)]
        obj = "COST"
    else:
        cnames = list(model.var_names)
        rnames = list(model.row_names)
        obj = OBJ_ROW
        if obj in rnames:
            raise ModelError(f"row name {obj!r} is reserved for the objective")
    if len(set(rnames)) != len(rnames):
        raise ModelError("duplicate row names")

    def line(*fields):
        if not fixed:
            return " " + " ".join(f for f in fields if f != "")
        # columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
        code, f1, f2, f3, f4, f5 = (list(fields) + [""] * 6)[:6]
        text = f" {code:<2} {f1:<8}  {f2:<8}  {f3:>12}   {f4:<8}  {f5:>12}"
        return text.rstrip()

    fmt = _fixed_num if fixed else _num
    out = [f"NAME          {model.name}" if fixed else f"NAME {model.name}", "ROWS"]
    out.append(line("N", obj))
    for i in range(m):
        out.append(line(_SENSE_CODE[model.senses[i]], rnames[i]))
    out.append("COLUMNS")
    A = model.matrix().tocsc()
    in_int = False
    marker = 0
    for j in range(n):
        if model.integer[j] and not in_int:
            out.append(line("", f"M{marker:07d}", "'MARKER'", "", "'INTORG'"))
            marker += 1
            in_int = True
        elif not model.integer[j] and in_int:
            out.append(line("", f"M{marker:07d}", "'MARKER'", "", "'INTEND'"))
            marker += 1
            in_int = False
        entries = []
        if model.cost[j] != 0.0:
            entries.append((obj, model.cost[j]))
        s, e = A.indptr[j], A.indptr[j + 1]
        for i, v in zip(A.indices[s:e], A.data[s:e]):
            entries.append((rnames[i], v))
        if not entries:
            entries.append((obj, 0.0))  # keep the column declared
        for k in range(0, len(entries), 2):
            pair = entries[k : k + 2]
            fields = ["", cnames[j], pair[0][0], fmt(pair[0][1])]
            if len(pair) == 2:
                fields += [pair[1][0], fmt(pair[1][1])]
            out.append(line(*fields))
    if in_int:
        out.append(line("", f"M{marker:07d}", "'MARKER'", "", "'INTEND'"))
    out.append("RHS")
    rhs_entries = [(rnames[i], model.rhs[i]) for i in range(m) if model.rhs[i] != 0.0]
    if model.obj_offset:
        rhs_entries.insert(0, (obj, -model.obj_offset))
    for k in range(0, len(rhs_entries), 2):
        pair = rhs_entries[k : k + 2]
        fields = ["", "RHS", pair[0][0], fmt(pair[0][1])]
        if len(pair) == 2:
            fields += [pair[1][0], fmt(pair[1][1])]
        out.append(line(*fields))
    out.append("BOUNDS")
    for code, name, val in _bound_lines(model, cnames):
        out.append(line(code, "BND", name, "" if val is None else fmt(val)))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


# -- LP writing --------------------------------------------------------------


def _lp_terms(coeffs: Iterable[tuple[str, float]]) -> str:
    parts = []
    for name, v in coeffs:
        sign = "-" if v < 0 else "+"
        mag = abs(v)
        term = name if mag == 1.0 else f"{_num(mag)} {name}"
        parts.append(f"{sign} {term}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def _wrap(text: str, width: int = 100) -> list[str]:
    words = text.split(" ")
    lines, cur = [], ""
    for w in words:
        if cur and len(cur) + 1 + len(w) > width:
            lines.append(cur)
            cur = "   " + w
        else:
            cur = f"{cur} {w}" if cur else w
    lines.append(cur)
    return lines


def write_lp(model: MilpModel) -> str:
    model.validate()
    names = model.var_names
    A = model.matrix()
    out = [f"\\ {model.name}", "Minimize"]
    obj = [(names[j], c) for j, c in enumerate(model.cost) if c != 0.0]
    if model.obj_offset:
        obj_text = _lp_terms(obj) + f" + {_num(model.obj_offset)} __offset"
    else:
        obj_text = _lp_terms(obj)
    out += [" " + ln for ln in _wrap("obj: " + obj_text)]
    out.append("Subject To")
    for i in range(model.num_constraints):
        s, e = A.indptr[i], A.indptr[i + 1]
        terms = [(names[j], v) for j, v in zip(A.indices[s:e], A.data[s:e])]
        rel = {"<=": "<=", ">=": ">=", "=": "="}[model.senses[i]]
        out += [" " + ln for ln in _wrap(f"{model.row_names[i]}: {_lp_terms(terms)} {rel} {_num(model.rhs[i])}")]
    out.append("Bounds")
    for j, name in enumerate(names):
        lo, hi = model.lower[j], model.upper[j]
        if lo == hi:
            out.append(f" {name} = {_num(lo)}")
        elif lo == -math.inf and hi == math.inf:
            out.append(f" {name} free")
        else:
            lo_s = "-inf" if lo == -math.inf else _num(lo)
            hi_s = "+inf" if hi == math.inf else _num(hi)
            out.append(f" {lo_s} <= {name} <= {hi_s}")
    if model.obj_offset:
        out.append(" __offset = 1")
    binaries = [n for j, n in enumerate(names) if model.integer[j] and model.lower[j] == 0 and model.upper[j] == 1]
    generals = [n for j, n in enumerate(names) if model.integer[j] and n not in set(binaries)]
    if generals:
        out.append("Generals")
        out += [" " + ln for ln in _wrap(" ".join(generals))]
    if binaries:
        out.append("Binaries")
        out += [" " + ln for ln in _wrap(" ".join(binaries))]
    out.append("End")
    return "\n".join(out) + "\n"


def export_model(model: MilpModel, fmt: str = "mps", path: str | os.PathLike | None = None) -> str:
    """Serialise ``model`` as ``mps`` (free), ``fixed-mps`` or ``lp``; write
    atomically to ``path`` when given.  Returns the text."""
    if fmt == "mps":
        text = write_mps(model)
    elif fmt == "fixed-mps":
        text = write_mps(model, fixed=True)
    elif fmt == "lp":
        text = write_lp(model)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if path is not None:
        atomic_write(path, text)
    return text


# -- MPS reading -------------------------------------------------------------


def read_mps(source: str | os.PathLike, text: str | None = None) -> MilpModel:
    """Parse free or fixed MPS (names must not contain spaces).

    Pass a path, or ``text=`` with the file content.  Integer columns
    without explicit bounds get [0, +inf).
    """
    if text is None:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    model = MilpModel("model")
    section = None
    obj_name = None
    maximize = False
    row_index: dict[str, int] = {}
    row_sense: list[str] = []
    row_names: list[str] = []
    col_index: dict[str, int] = {}
    col_names: list[str] = []
    col_int: list[bool] = []
    costs: dict[int, float] = {}
    entries: list[tuple[int, int, float]] = []
    rhs: dict[int, float] = {}
    offset = 0.0
    bounds: dict[int, list[float | None]] = {}
    integer_mode = False

    def num(tok: str, ln: int) -> float:
        try:
            return float(tok)
        except ValueError:
            raise MpsError(f"bad number {tok!r}", ln) from None

    for ln, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            key = head[0].upper()
            if key == "NAME":
                model.name = head[1] if len(head) > 1 else "model"
                section = None
            elif key in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "RANGES"):
                section = key
            elif key == "OBJSENSE":
                section = "OBJSENSE"
                if len(head) > 1:
                    maximize = head[1].upper() in ("MAX", "MAXIMIZE")
            elif key == "ENDATA":
                break
            else:
                raise MpsError(f"unknown section {head[0]!r}", ln)
            continue
        tok = raw.split()
        if section == "OBJSENSE":
            maximize = tok[0].upper() in ("MAX", "MAXIMIZE")
        elif section == "ROWS":
            if len(tok) != 2:
                raise MpsError("ROWS entry needs a type and a name", ln)
            code, name = tok[0].upper(), tok[1]
            if code == "N":
                if obj_name is None:
                    obj_name = name
                continue  # extra free rows are ignored
            if code not in _CODE_SENSE:
                raise MpsError(f"unknown row type {code!r}", ln)
            if name in row_index:
                raise MpsError(f"duplicate row {name!r}", ln)
            row_index[name] = len(row_names)
            row_names.append(name)
            row_sense.append(_CODE_SENSE[code])
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1].strip("'").upper() == "MARKER":
                flag = tok[-1].strip("'").upper()
                if flag == "INTORG":
                    integer_mode = True
                elif flag == "INTEND":
                    integer_mode = False
                else:
                    raise MpsError(f"unknown marker {flag!r}", ln)
                continue
            if len(tok) not in (3, 5):
                raise MpsError("COLUMNS entry needs 3 or 5 fields", ln)
            cname = tok[0]
            if cname not in col_index:
                col_index[cname] = len(col_names)
                col_names.append(cname)
                col_int.append(integer_mode)
            j = col_index[cname]
            for k in range(1, len(tok), 2):
                rname, v = tok[k], num(tok[k + 1], ln)
                if rname == obj_name:
                    costs[j] = costs.get(j, 0.0) + v
                elif rname in row_index:
                    entries.append((row_index[rname], j, v))
                else:
                    raise MpsError(f"unknown row {rname!r}", ln)
        elif section == "RHS":
            pairs = tok[1:] if len(tok) in (3, 5) else tok
            if len(pairs) not in (2, 4):
                raise MpsError("RHS entry needs 2 or 4 value fields", ln)
            for k in range(0, len(pairs), 2):
                rname, v = pairs[k], num(pairs[k + 1], ln)
                if rname == obj_name:
                    offset = -v
                elif rname in row_index:
                    rhs[row_index[rname]] = v
                else:
                    raise MpsError(f"unknown row {rname!r}", ln)
        elif section == "RANGES":
            raise MpsError("RANGES are not supported", ln)
        elif section == "BOUNDS":
            code = tok[0].upper()
            if code in ("FR", "MI", "PL", "BV"):
                if len(tok) < 3:
                    raise MpsError("bound entry too short", ln)
                cname, val = tok[2], None
            else:
                if len(tok) < 4:
                    raise MpsError("bound entry needs a value", ln)
                cname, val = tok[2], num(tok[3], ln)
            if cname not in col_index:
                raise MpsError(f"bound on unknown column {cname!r}", ln)
            j = col_index[cname]
            b = bounds.setdefault(j, [None, None])
            if code == "UP":
                b[1] = val
                if val < 0 and b[0] is None:
                    b[0] = -math.inf
            elif code == "LO":
                b[0] = val
            elif code == "FX":
                b[0] = b[1] = val
            elif code == "FR":
                b[0], b[1] = -math.inf, math.inf
            elif code == "MI":
                b[0] = -math.inf
            elif code == "PL":
                b[1] = math.inf
            elif code == "BV":
                b[0], b[1] = 0.0, 1.0
                col_int[j] = True
            elif code in ("LI", "UI"):
                col_int[j] = True
                b[0 if code == "LI" else 1] = val
            else:
                raise MpsError(f"unknown bound type {code!r}", ln)
        else:
            raise MpsError("data outside a section", ln)

    sign = -1.0 if maximize else 1.0
    for j, name in enumerate(col_names):
        lo, hi = bounds.get(j, [None, None])
        model.add_variable(
            name,
            0.0 if lo is None else lo,
            math.inf if hi is None else hi,
            integer=col_int[j],
            cost=sign * costs.get(j, 0.0),
        )
    per_row: list[dict[int, float]] = [dict() for _ in row_names]
    for i, j, v in entries:
        per_row[i][j] = per_row[i].get(j, 0.0) + v
    for i, name in enumerate(row_names):
        model.add_constraint(per_row[i], row_sense[i], rhs.get(i, 0.0), name)
    model.obj_offset = sign * offset
    return model
