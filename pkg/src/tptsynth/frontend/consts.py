"""Compile-time integer evaluation shared by the checker and the unroller."""

from __future__ import annotations

from tptsynth.frontend import ast as A


class ConstEvalError(Exception):
    def __init__(self, message, loc=(0, 0)):
        self.loc = loc
        super().__init__(message)


class NotConstant(Exception):
    """The expression refers to something that is not known at compile time."""


def int_binop(op: str, a: int, b: int, loc=(0, 0)) -> int:
    """Runtime-style integer semantics: floor division, nonnegative ``%``."""
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op in ("/", "%"):
        if b == 0:
            raise ConstEvalError("division by zero", loc)
        return a // b if op == "/" else a % b
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    if op == ">=":
        return int(a >= b)
    if op == "and":
        return b if a else a
    if op == "or":
        return a if a else b
    raise ConstEvalError(f"unknown operator {op}", loc)


def fold(e, env: dict, allow_negative: bool = False) -> int:
    """Evaluate a compile-time expression.

    ``env`` maps names to ints. Raises :class:`NotConstant` when the
    expression mentions anything outside ``env`` (variables, calls) and
    :class:`ConstEvalError` on arithmetic faults. Unless ``allow_negative``
    is set, any negative intermediate value is an error, since every domain
    in the language is ``{0..N-1}``.
    """
    if isinstance(e, A.Num):
        return e.value
    if isinstance(e, A.Name):
        if e.id in env:
            return env[e.id]
        raise NotConstant(e.id)
    if isinstance(e, A.BinOp):
        a = fold(e.left, env, allow_negative)
        b = fold(e.right, env, allow_negative)
        v = int_binop(e.op, a, b, e.loc)
        if v < 0 and not allow_negative:
            raise ConstEvalError(f"negative intermediate value {v} in constant expression", e.loc)
        return v
    if isinstance(e, A.UnaryOp):
        return int(not fold(e.operand, env, allow_negative))
    if isinstance(e, A.IfExp):
        return fold(e.body, env, allow_negative) if fold(e.test, env, allow_negative) else fold(e.orelse, env, allow_negative)
    raise NotConstant(type(e).__name__)


def is_constant(e, env: dict) -> bool:
    try:
        fold(e, env, allow_negative=True)
        return True
    except NotConstant:
        return False
    except ConstEvalError:
        return True
