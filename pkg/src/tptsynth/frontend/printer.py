"""Pretty-printer; ``parse(tokenize(format_program(p))) == p`` for any parsed ``p``."""

from __future__ import annotations

from tptsynth.frontend import ast as A

_PREC = {"or": 1, "and": 2, "==": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3, "+": 4, "-": 4, "*": 5, "/": 5, "%": 5}
_ATOM = 7


def _prec(e) -> int:
    if isinstance(e, A.IfExp):
        return 0
    if isinstance(e, A.BinOp):
        return _PREC[e.op]
    if isinstance(e, A.UnaryOp):
        return 6
    return _ATOM


def _wrap(e, need_above: int) -> str:
    s = format_expr(e)
    return f"({s})" if _prec(e) <= need_above else s


def format_expr(e) -> str:
    if isinstance(e, A.Num):
        return str(e.value)
    if isinstance(e, A.Name):
        return e.id
    if isinstance(e, A.Cell):
        return e.label()
    if isinstance(e, A.Index):
        return f"{e.name}[{', '.join(format_expr(i) for i in e.indices)}]"
    if isinstance(e, A.Call):
        return f"{e.func}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, A.UnaryOp):
        return f"not {_wrap(e.operand, 5)}"
    if isinstance(e, A.IfExp):
        return f"{_wrap(e.body, 0)} if {_wrap(e.test, 0)} else {_wrap(e.orelse, -1)}"
    if isinstance(e, A.BinOp):
        p = _PREC[e.op]
        if p == 3:  # comparisons do not chain
            return f"{_wrap(e.left, 3)} {e.op} {_wrap(e.right, 3)}"
        return f"{_wrap(e.left, p - 1)} {e.op} {_wrap(e.right, p)}"
    raise TypeError(f"cannot format {type(e).__name__}")


def _block(stmts, depth: int) -> list[str]:
    out: list[str] = []
    for s in stmts:
        out.extend(format_stmt(s, depth))
    return out


def format_stmt(s, depth: int = 0) -> list[str]:
    pad = "    " * depth
    if isinstance(s, A.ConstDecl):
        return [f"{pad}{s.name} = {format_expr(s.value)}"]
    if isinstance(s, A.Assign):
        return [f"{pad}{s.name} = {format_expr(s.value)}"]
    if isinstance(s, A.VarDecl):
        dims = f"[{', '.join(format_expr(d) for d in s.dims)}]" if s.dims else ""
        return [f"{pad}{s.name} = {s.kind}({format_expr(s.domain)}){dims}"]
    if isinstance(s, A.SetTo):
        return [f"{pad}{format_expr(s.target)}.set_to({format_expr(s.value)})"]
    if isinstance(s, A.SetToConstant):
        return [f"{pad}{format_expr(s.target)}.set_to_constant({format_expr(s.value)})"]
    if isinstance(s, A.ObserveValue):
        return [f"{pad}{format_expr(s.target)}.observe_value({format_expr(s.value)})"]
    if isinstance(s, A.Return):
        return [f"{pad}return {format_expr(s.value)}"]
    if isinstance(s, A.For):
        if isinstance(s.start, A.Num) and s.start.value == 0:
            rng = format_expr(s.stop)
        else:
            rng = f"{format_expr(s.start)}, {format_expr(s.stop)}"
        return [f"{pad}for {s.var} in range({rng}):"] + _block(s.body, depth + 1)
    if isinstance(s, A.With):
        return [f"{pad}with {format_expr(s.expr)} as {s.var}:"] + _block(s.body, depth + 1)
    if isinstance(s, A.If):
        lines = [f"{pad}if {format_expr(s.test)}:"] + _block(s.body, depth + 1)
        cur = s
        while cur.orelse:
            if len(cur.orelse) == 1 and isinstance(cur.orelse[0], A.If):
                cur = cur.orelse[0]
                lines.append(f"{pad}elif {format_expr(cur.test)}:")
                lines.extend(_block(cur.body, depth + 1))
            else:
                lines.append(f"{pad}else:")
                lines.extend(_block(cur.orelse, depth + 1))
                break
        return lines
    if isinstance(s, A.FuncDef):
        ins = ", ".join(format_expr(d) for d in s.in_domains)
        return [
            f"{pad}@CompileMe([{ins}], {format_expr(s.out_domain)})",
            f"{pad}def {s.name}({', '.join(s.params)}):",
        ] + _block(s.body, depth + 1)
    raise TypeError(f"cannot format {type(s).__name__}")


def format_program(p: A.Program) -> str:
    return "\n".join(_block(p.body, 0)) + "\n"
