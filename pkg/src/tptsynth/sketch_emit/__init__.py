"""Sketch source emission.

Params become holes (``??``) with bound assertions, observations become
``assert`` statements and the model body is wrapped in a single
``harness``. Loops and ``with`` blocks are emitted natively, so the output
has the shape of the source rather than of its unrolled form.

Sketch distinguishes ``bit`` from ``int``. Comparisons and ``not`` produce
bits; where the source uses one as a number it is wrapped in ``(b ? 1 : 0)``
and where a number is used as a condition it becomes ``(x != 0)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from tptsynth.frontend import ast as A

INDENT = "  "
_CMP = {"==", "!=", "<", "<=", ">", ">="}


@dataclass
class SketchUnit:
    helpers: list  # function definitions, one string each
    harness: str
    globals: list = field(default_factory=list)
    hole_count: int = 0

    @property
    def text(self) -> str:
        parts = []
        if self.globals:
            parts.append("\n".join(self.globals))
        parts.extend(self.helpers)
        parts.append(self.harness)
        return "\n\n".join(parts) + "\n"

    def __str__(self) -> str:
        return self.text


def _is_bit(e) -> bool:
    if isinstance(e, A.UnaryOp):
        return True
    if isinstance(e, A.BinOp):
        if e.op in _CMP:
            return True
        if e.op in ("and", "or"):
            return _is_bit(e.left) and _is_bit(e.right)
    if isinstance(e, A.IfExp):
        return _is_bit(e.body) and _is_bit(e.orelse)
    return False


def _atom(text: str, e) -> str:
    return f"({text})" if isinstance(e, (A.BinOp, A.IfExp)) else text


def expr_int(e) -> str:
    """Render ``e`` where an ``int`` is expected."""
    if _is_bit(e):
        return f"({expr_bit(e)} ? 1 : 0)"
    if isinstance(e, A.Num):
        return str(e.value)
    if isinstance(e, A.Name):
        return e.id
    if isinstance(e, A.Cell):
        return e.name + "".join(f"[{i}]" for i in e.indices)
    if isinstance(e, A.Index):
        return e.name + "".join(f"[{expr_int(i)}]" for i in e.indices)
    if isinstance(e, A.Call):
        return f"{e.func}({', '.join(expr_int(a) for a in e.args)})"
    if isinstance(e, A.IfExp):
        return f"({expr_bit(e.test)} ? {expr_int(e.body)} : {expr_int(e.orelse)})"
    if isinstance(e, A.BinOp):
        if e.op in ("and", "or"):
            # Python returns an operand here, not a truth value.
            a, b = expr_int(e.left), expr_int(e.right)
            test = expr_bit(e.left)
            return f"({test} ? {b} : {a})" if e.op == "and" else f"({test} ? {a} : {b})"
        return f"{_atom(expr_int(e.left), e.left)} {e.op} {_atom(expr_int(e.right), e.right)}"
    raise TypeError(f"cannot render {type(e).__name__}")


def expr_bit(e) -> str:
    """Render ``e`` where a ``bit`` is expected."""
    if not _is_bit(e):
        return f"{_atom(expr_int(e), e)} != 0"
    if isinstance(e, A.UnaryOp):
        return f"!({expr_bit(e.operand)})"
    if isinstance(e, A.IfExp):
        return f"({expr_bit(e.test)} ? {expr_bit(e.body)} : {expr_bit(e.orelse)})"
    if e.op == "and":
        return f"{_atom(expr_bit(e.left), e.left)} && {_atom(expr_bit(e.right), e.right)}"
    if e.op == "or":
        return f"({_atom(expr_bit(e.left), e.left)} || {_atom(expr_bit(e.right), e.right)})"
    return f"{_atom(expr_int(e.left), e.left)} {e.op} {_atom(expr_int(e.right), e.right)}"


class _Emitter:
    def __init__(self, ast: A.Ast):
        self.ast = ast
        self.holes = 0

    def dims(self, d) -> str:
        return "".join(f"[{n}]" for n in d.dims)

    def decl(self, s: A.VarDecl, depth: int) -> list:
        info = self.ast.decl(s.name)
        pad = INDENT * depth
        if info.kind == "Var":
            return [f"{pad}int{self.dims(info)} {s.name};"]
        if not info.dims:
            self.holes += 1
            return [f"{pad}int {s.name} = ??;", f"{pad}assert {s.name} < {info.domain};"]
        ty = f"int{self.dims(info)}"
        self.holes += int(_prod(info.dims))
        out = [f"{pad}{ty} {s.name} = ({ty}) ??;"]
        loops = [f"_i{k}" for k in range(len(info.dims))]
        for k, (v, n) in enumerate(zip(loops, info.dims)):
            out.append(f"{pad}{INDENT * k}for(int {v} = 0; {v} < {n}; {v}++) {{")
        inner = pad + INDENT * len(loops)
        out.append(f"{inner}assert {s.name}{''.join(f'[{v}]' for v in loops)} < {info.domain};")
        for k in reversed(range(len(loops))):
            out.append(f"{pad}{INDENT * k}}}")
        return out

    def block(self, stmts, depth, scope: set) -> list:
        out = []
        for s in stmts:
            out.extend(self.stmt(s, depth, scope))
        return out

    def stmt(self, s, depth: int, scope: set) -> list:
        pad = INDENT * depth
        if isinstance(s, A.ConstDecl):
            return []
        if isinstance(s, A.VarDecl):
            return self.decl(s, depth)
        if isinstance(s, A.FuncDef):
            return []
        if isinstance(s, (A.SetTo, A.SetToConstant)):
            return [f"{pad}{expr_int(s.target)} = {expr_int(s.value)};"]
        if isinstance(s, A.ObserveValue):
            return [f"{pad}assert {expr_int(s.target)} == {expr_int(s.value)};"]
        if isinstance(s, A.Assign):
            if s.name in scope:
                return [f"{pad}{s.name} = {expr_int(s.value)};"]
            scope.add(s.name)
            return [f"{pad}int {s.name} = {expr_int(s.value)};"]
        if isinstance(s, A.Return):
            return [f"{pad}return {expr_int(s.value)};"]
        if isinstance(s, A.If):
            out = [f"{pad}if ({expr_bit(s.test)}) {{"]
            out += self.block(s.body, depth + 1, set(scope))
            if s.orelse:
                out.append(f"{pad}}} else {{")
                out += self.block(s.orelse, depth + 1, set(scope))
            out.append(f"{pad}}}")
            return out
        if isinstance(s, A.For):
            v = s.var
            out = [f"{pad}for(int {v} = {expr_int(s.start)}; {v} < {expr_int(s.stop)}; {v}++) {{"]
            out += self.block(s.body, depth + 1, scope | {v})
            out.append(f"{pad}}}")
            return out
        if isinstance(s, A.With):
            out = [f"{pad}{{", f"{pad}{INDENT}int {s.var} = {expr_int(s.expr)};"]
            out += self.block(s.body, depth + 1, scope | {s.var})
            out.append(f"{pad}}}")
            return out
        raise TypeError(f"cannot emit {type(s).__name__}")

    def function(self, fn: A.FuncDef) -> str:
        params = ", ".join(f"int {p}" for p in fn.params)
        body = self.block(fn.body, 1, set(fn.params))
        return "\n".join([f"int {fn.name}({params}) {{", *body, "}"])


def _prod(xs) -> int:
    out = 1
    for x in xs:
        out *= x
    return out


def hole_count(ast: A.Ast) -> int:
    """Number of scalar Param cells, which is the number of ``??`` holes."""
    return sum(_prod(d.dims) for d in ast.param_decls.values())


def emit_sketch(ast: A.Ast, observations: Optional[Iterable] = None, name: str = "model") -> SketchUnit:
    """Translate a checked (not unrolled) program to a Sketch unit.

    ``observations`` optionally adds ``(name, indices, value)`` assertions
    after the model body, for observations kept outside the source text.
    """
    em = _Emitter(ast)
    consts = [f"int {k} = {v};" for k, v in ast.const_decls.items()]
    helpers = [em.function(s) for s in ast.program.body if isinstance(s, A.FuncDef)]
    body = []
    for s in ast.program.body:
        body += em.stmt(s, 1, set())
    for cname, idx, value in observations or ():
        cell = A.Cell(cname, tuple(idx))
        body.append(f"{INDENT}assert {expr_int(cell)} == {int(value)};")
    harness = "\n".join([f"harness void {name}() {{", *body, "}"])
    unit = SketchUnit(helpers, harness, consts, em.holes)
    assert unit.hole_count == hole_count(ast)
    return unit


__all__ = ["SketchUnit", "emit_sketch", "expr_bit", "expr_int", "hole_count"]
