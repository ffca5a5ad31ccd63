"""Loop, ``with`` and index unrolling.

The result is a flat statement tree over scalar cells: every ``for`` is
replaced by copies of its body, every ``with a as v`` by an ``if``/``elif``
chain over the domain of ``a``, every array access by a :class:`Cell` with
constant indices, and every constant sub-expression by a :class:`Num`.
Conditions whose value is known at compile time are resolved on the spot, so
the only ``If`` nodes left have tests of the form ``Cell == Num``.
"""

from __future__ import annotations

from dataclasses import dataclass

from tptsynth.errors import UnrollError
from tptsynth.frontend import ast as A
from tptsynth.frontend.consts import ConstEvalError, int_binop


@dataclass
class UnrolledProgram:
    """Unrolled model statements plus the declaration tables they refer to."""

    ast: A.Ast
    statements: tuple

    @property
    def functions(self):
        return self.ast.functions

    def decl(self, name):
        return self.ast.decl(name)

    def cells(self):
        """All scalar cells of all declarations, in declaration then row-major order."""
        import itertools

        for d in self.ast.all_decls:
            for idx in itertools.product(*(range(n) for n in d.dims)):
                yield d, tuple(idx)


def _err(msg, loc):
    return UnrollError(msg, loc[0] or None, loc[1] or None)


class _Unroller:
    def __init__(self, ast: A.Ast):
        self.ast = ast
        self.consts = ast.const_decls

    # -- expressions ---------------------------------------------------------
    def const_value(self, e, env) -> int:
        e2 = self.expr(e, env)
        if not isinstance(e2, A.Num):
            raise _err("expected a compile-time constant", getattr(e, "loc", (0, 0)))
        return e2.value

    def cell(self, e, env) -> A.Cell:
        if isinstance(e, A.Name):
            name, idx_exprs = e.id, ()
        elif isinstance(e, A.Index):
            name, idx_exprs = e.name, e.indices
        else:
            raise _err("expected a variable reference", getattr(e, "loc", (0, 0)))
        d = self.ast.decl(name)
        if d is None:
            raise _err(f"'{name}' is not a Var or Param", e.loc)
        if len(idx_exprs) != len(d.dims):
            raise _err(f"'{name}' has {len(d.dims)} dimensions, {len(idx_exprs)} indices given", e.loc)
        idx = tuple(self.const_value(i, env) for i in idx_exprs)
        for k, (i, n) in enumerate(zip(idx, d.dims)):
            if not 0 <= i < n:
                shown = A.Cell(name, idx).label()
                raise _err(f"index {i} out of bounds for dimension {k} of '{name}' (size {n}) in {shown}", e.loc)
        return A.Cell(name, idx, loc=e.loc)

    def expr(self, e, env):
        if isinstance(e, A.Num):
            return e
        if isinstance(e, A.Name):
            if e.id in env:
                return A.Num(env[e.id], loc=e.loc)
            if e.id in self.consts:
                return A.Num(self.consts[e.id], loc=e.loc)
            return self.cell(e, env)
        if isinstance(e, A.Index):
            return self.cell(e, env)
        if isinstance(e, A.Call):
            return A.Call(e.func, tuple(self.expr(a, env) for a in e.args), loc=e.loc)
        if isinstance(e, A.BinOp):
            left, right = self.expr(e.left, env), self.expr(e.right, env)
            if isinstance(left, A.Num) and isinstance(right, A.Num):
                try:
                    return A.Num(int_binop(e.op, left.value, right.value, e.loc), loc=e.loc)
                except ConstEvalError as exc:
                    raise _err(str(exc), e.loc) from None
            return A.BinOp(e.op, left, right, loc=e.loc)
        if isinstance(e, A.UnaryOp):
            operand = self.expr(e.operand, env)
            if isinstance(operand, A.Num):
                return A.Num(int(not operand.value), loc=e.loc)
            return A.UnaryOp(e.op, operand, loc=e.loc)
        if isinstance(e, A.IfExp):
            test = self.expr(e.test, env)
            if isinstance(test, A.Num):
                return self.expr(e.body if test.value else e.orelse, env)
            return A.IfExp(self.expr(e.body, env), test, self.expr(e.orelse, env), loc=e.loc)
        raise _err(f"unexpected expression {type(e).__name__}", getattr(e, "loc", (0, 0)))

    def condition(self, test, env):
        """Return a Num (statically known) or a normalized ``Cell == Num`` test."""
        t = self.expr(test, env)
        if isinstance(t, A.Num):
            return t
        if isinstance(t, A.BinOp) and t.op == "==":
            if isinstance(t.left, A.Cell) and isinstance(t.right, A.Num):
                return t
            if isinstance(t.right, A.Cell) and isinstance(t.left, A.Num):
                return A.BinOp("==", t.right, t.left, loc=t.loc)
        raise _err("gate conditions must have the form `variable == constant`", getattr(test, "loc", (0, 0)))

    # -- statements ------------------------------------------------------------
    def block(self, stmts, env) -> list:
        out: list = []
        for s in stmts:
            out.extend(self.stmt(s, env))
        return out

    def stmt(self, s, env) -> list:
        if isinstance(s, A.SetTo):
            return [A.SetTo(self.cell(s.target, env), self.expr(s.value, env), loc=s.loc)]
        if isinstance(s, (A.SetToConstant, A.ObserveValue)):
            return [type(s)(self.cell(s.target, env), A.Num(self.const_value(s.value, env)), loc=s.loc)]
        if isinstance(s, A.For):
            lo, hi = self.const_value(s.start, env), self.const_value(s.stop, env)
            out = []
            for v in range(lo, hi):
                out.extend(self.block(s.body, {**env, s.var: v}))
            return out
        if isinstance(s, A.With):
            c = self.cell(s.expr, env)
            dom = self.ast.decl(c.name).domain
            branches = [(v, self.block(s.body, {**env, s.var: v})) for v in range(dom)]
            return _chain(c, branches, (), s.loc)
        if isinstance(s, A.If):
            test = self.condition(s.test, env)
            if isinstance(test, A.Num):
                return self.block(s.body if test.value else s.orelse, env)
            body = tuple(self.block(s.body, env))
            orelse = tuple(self.block(s.orelse, env))
            if not body and not orelse:
                return []
            return [A.If(test, body, orelse, loc=s.loc)]
        raise _err(f"statement {type(s).__name__} cannot appear in a model body", getattr(s, "loc", (0, 0)))


def _chain(c: A.Cell, branches, tail, loc):
    """Build ``if c == v0: b0 elif c == v1: b1 ...`` from ``(value, body)`` pairs."""
    node = tuple(tail)
    for v, body in reversed(branches):
        node = (A.If(A.BinOp("==", c, A.Num(v), loc=loc), tuple(body), node, loc=loc),)
    return list(node)


def unroll(ast: A.Ast) -> UnrolledProgram:
    """Expand loops, ``with`` blocks and constant indices of a checked program."""
    cached = getattr(ast, "_unrolled", None)
    if cached is not None:
        return cached
    stmts = tuple(_Unroller(ast).block(ast.statements, {}))
    return UnrolledProgram(ast, stmts)
