"""CPLEX LP text writer and a reader for the subset it produces."""

from __future__ import annotations

import re

from tptsynth.errors import SolverError
from tptsynth.lp.build import LpModel

MAX_LINE = 250


def _fmt(c: float) -> str:
    if c == int(c):
        return str(int(c))
    return repr(float(c))


def _terms(coeffs, names) -> list:
    out = []
    for k, (j, c) in enumerate(coeffs):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        coef = "" if mag == 1 else f"{_fmt(mag)} "
        if k == 0:
            out.append(f"{'-' if c < 0 else ''}{coef}{names[j]}")
        else:
            out.append(f"{sign} {coef}{names[j]}")
    return out


def _wrap(head: str, parts: list, tail: str) -> list:
    lines, cur = [], head
    for p in parts + ([tail] if tail else []):
        if len(cur) + 1 + len(p) > MAX_LINE and cur.strip():
            lines.append(cur)
            cur = "   " + p
        else:
            cur = f"{cur} {p}" if cur else p
    lines.append(cur)
    return lines


def emit_lp(model: LpModel) -> str:
    names = model.columns
    out = ["\\ gated LP relaxation", "Maximize"]
    obj = sorted(model.objective.items())
    out.extend(_wrap(" obj:", _terms(obj, names), "") if obj else [" obj:"])
    out.append("Subject To")
    for r in model.rows:
        out.extend(_wrap(f" {r.name}:", _terms(r.coeffs, names), f"{r.sense} {_fmt(r.rhs)}"))
    out.append("Bounds")
    out.extend(f" 0 <= {n} <= 1" for n in names)
    if model.milp and model.binaries:
        out.append("Binary")
        out.extend(f" {names[j]}" for j in model.binaries)
    out.append("End")
    return "\n".join(out) + "\n"


_SECTIONS = {
    "maximize": "max",
    "maximise": "max",
    "maximum": "max",
    "max": "max",
    "minimize": "min",
    "minimise": "min",
    "minimum": "min",
    "min": "min",
    "subject to": "st",
    "such that": "st",
    "st": "st",
    "s.t.": "st",
    "bounds": "bounds",
    "bound": "bounds",
    "binary": "binary",
    "binaries": "binary",
    "bin": "binary",
    "general": "general",
    "generals": "general",
    "gen": "general",
    "end": "end",
}

def _parse_expr(text: str) -> list:
    terms = []
    s = text.strip()
    sign = 1.0
    tokens = re.findall(r"[+-]|[0-9][0-9.eE]*(?:[eE][+-]?\d+)?|[^\s+-]+", s)
    coef = None
    for tok in tokens:
        if tok == "+":
            continue
        if tok == "-":
            sign = -sign
            continue
        if re.fullmatch(r"[0-9][0-9.]*(?:[eE][+-]?\d+)?", tok):
            coef = float(tok)
            continue
        terms.append((tok, sign * (coef if coef is not None else 1.0)))
        sign, coef = 1.0, None
    if coef is not None:
        terms.append((None, sign * coef))
    return terms


def parse_lp(text: str) -> dict:
    """Parse the LP subset written by :func:`emit_lp`.

    Returns ``{"sense", "objective": [(name, c)], "rows": [(name, [(col, c)], sense, rhs)],
    "bounds": {col: (lo, hi)}, "binary": [col], "columns": [col]}``.
    """
    section = None
    sense = "max"
    objective: list = []
    rows: list = []
    bounds: dict = {}
    binary: list = []
    columns: dict = {}
    pending = ""

    def note(name):
        if name is not None and name not in columns:
            columns[name] = len(columns)

    def flush_row(stmt):
        if ":" in stmt:
            name, body = stmt.split(":", 1)
        else:
            name, body = f"r{len(rows)}", stmt
        m = re.search(r"(<=|>=|=<|=>|=|<|>)\s*([-+]?[0-9.eE+-]+)\s*$", body)
        if not m:
            raise SolverError(f"cannot parse constraint: {stmt[:80]}")
        op = {"=<": "<=", "=>": ">=", "<": "<=", ">": ">="}.get(m.group(1), m.group(1))
        terms = _parse_expr(body[: m.start()])
        for n, _c in terms:
            note(n)
        rows.append((name.strip(), [(n, c) for n, c in terms if n is not None], op, float(m.group(2))))

    lines = text.split("\n")
    for raw in lines:
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in _SECTIONS and not line.startswith(" "):
            if pending:
                flush_row(pending)
                pending = ""
            section = _SECTIONS[key]
            if section in ("max", "min"):
                sense = section
            if section == "end":
                break
            continue
        if section in ("max", "min"):
            body = line.split(":", 1)[1] if ":" in line else line
            for n, c in _parse_expr(body):
                note(n)
                if n is not None:
                    objective.append((n, c))
        elif section == "st":
            if line.startswith("   ") and pending:
                pending += " " + line.strip()
                continue
            if pending:
                flush_row(pending)
            pending = line.strip()
        elif section == "bounds":
            m = re.fullmatch(r"\s*([-+]?[0-9.eE+-]+|-inf)\s*<=\s*(\S+)\s*<=\s*([-+]?[0-9.eE+-]+|\+?inf)\s*", line)
            if m:
                lo = -float("inf") if "inf" in m.group(1) else float(m.group(1))
                hi = float("inf") if "inf" in m.group(3) else float(m.group(3))
                bounds[m.group(2)] = (lo, hi)
                note(m.group(2))
            else:
                raise SolverError(f"cannot parse bound: {line.strip()[:80]}")
        elif section in ("binary", "general"):
            for n in line.split():
                binary.append(n)
                note(n)
    if pending:
        flush_row(pending)
    return {
        "sense": sense,
        "objective": objective,
        "rows": rows,
        "bounds": bounds,
        "binary": binary,
        "columns": list(columns),
    }
