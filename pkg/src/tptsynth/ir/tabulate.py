"""Evaluation of ``@CompileMe`` functions and runtime expressions over integers.

A function is turned into a dense table by evaluating its body on every
input configuration. Results that fall outside the declared output domain are
stored as :data:`OUT_OF_RANGE` rather than raising, because a guarded factor
may legitimately never reach them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from tptsynth.errors import TabulationError
from tptsynth.frontend import ast as A
from tptsynth.frontend.consts import ConstEvalError, int_binop

OUT_OF_RANGE = -1


class OutOfRange(Exception):
    """A value left the domain it was supposed to live in."""


@dataclass(frozen=True)
class FactorTable:
    in_domains: tuple
    out_domain: int
    table: np.ndarray  # shape == in_domains, dtype int64, OUT_OF_RANGE marks leaks

    @property
    def leaky(self) -> bool:
        return bool((self.table == OUT_OF_RANGE).any())

    def __call__(self, *args: int) -> int:
        return int(self.table[tuple(args)])


class _Return(Exception):
    def __init__(self, value):
        self.value = value


def _eval_body(fn: A.FunctionInfo, args, functions, consts) -> int:
    env = dict(consts)
    env.update(zip(fn.params, args))
    try:
        _exec_block(fn.body, env, functions, consts)
    except _Return as r:
        return r.value
    raise TabulationError(
        f"function '{fn.name}' finished without returning for arguments {tuple(args)}", fn.loc[0], fn.loc[1]
    )


def _exec_block(stmts, env, functions, consts):
    for s in stmts:
        if isinstance(s, A.Assign):
            env[s.name] = eval_expr(s.value, env.__getitem__, functions, consts)
        elif isinstance(s, A.Return):
            raise _Return(eval_expr(s.value, env.__getitem__, functions, consts))
        elif isinstance(s, A.If):
            if eval_expr(s.test, env.__getitem__, functions, consts):
                _exec_block(s.body, env, functions, consts)
            else:
                _exec_block(s.orelse, env, functions, consts)
        else:
            raise TabulationError(f"unsupported statement {type(s).__name__} in function body", *s.loc)


def call_function(fn: A.FunctionInfo, args, functions, consts=None) -> int:
    """Apply ``fn``; raise :class:`OutOfRange` if an argument or the result leaves its domain."""
    for a, d in zip(args, fn.in_domains):
        if not 0 <= a < d:
            raise OutOfRange(f"argument {a} outside input domain {d} of '{fn.name}'")
    v = _eval_body(fn, args, functions, consts or {})
    if not 0 <= v < fn.out_domain:
        raise OutOfRange(f"'{fn.name}' returned {v}, outside its output domain {fn.out_domain}")
    return v


def eval_expr(e, lookup, functions, consts=None) -> int:
    """Evaluate a runtime expression.

    ``lookup`` resolves :class:`Name` ids (function locals) and :class:`Cell`
    keys. Calls go through :func:`call_function`, so they may raise
    :class:`OutOfRange`. Arithmetic faults raise :class:`TabulationError`.
    """
    if isinstance(e, A.Num):
        return e.value
    if isinstance(e, A.Name):
        return lookup(e.id)
    if isinstance(e, A.Cell):
        return lookup(e.key())
    if isinstance(e, A.BinOp):
        if e.op == "and":
            a = eval_expr(e.left, lookup, functions, consts)
            return eval_expr(e.right, lookup, functions, consts) if a else a
        if e.op == "or":
            a = eval_expr(e.left, lookup, functions, consts)
            return a if a else eval_expr(e.right, lookup, functions, consts)
        a = eval_expr(e.left, lookup, functions, consts)
        b = eval_expr(e.right, lookup, functions, consts)
        try:
            return int_binop(e.op, a, b, e.loc)
        except ConstEvalError as exc:
            raise TabulationError(str(exc), e.loc[0] or None, e.loc[1] or None) from None
    if isinstance(e, A.UnaryOp):
        return int(not eval_expr(e.operand, lookup, functions, consts))
    if isinstance(e, A.IfExp):
        if eval_expr(e.test, lookup, functions, consts):
            return eval_expr(e.body, lookup, functions, consts)
        return eval_expr(e.orelse, lookup, functions, consts)
    if isinstance(e, A.Call):
        fn = functions[e.func]
        args = [eval_expr(a, lookup, functions, consts) for a in e.args]
        return call_function(fn, args, functions, consts)
    raise TabulationError(f"cannot evaluate {type(e).__name__}")


def tabulate_function(fn: A.FunctionInfo, functions=None, consts=None) -> FactorTable:
    """Dense table of ``fn`` over its declared input domains."""
    functions = functions if functions is not None else {fn.name: fn}
    table = np.full(fn.in_domains, OUT_OF_RANGE, dtype=np.int64)
    for args in itertools.product(*(range(d) for d in fn.in_domains)):
        try:
            table[args] = call_function(fn, args, functions, consts)
        except OutOfRange:
            pass
    return FactorTable(tuple(fn.in_domains), fn.out_domain, table)


def tabulate_expr(e, cells, domains, out_domain, functions, consts=None) -> FactorTable:
    """Table of expression ``e`` over the cartesian product of its input cells.

    ``cells`` lists the distinct cell keys read by ``e`` and ``domains`` their
    sizes. Entries whose value (or any intermediate call) leaves its domain
    become :data:`OUT_OF_RANGE`.
    """
    table = np.full(tuple(domains), OUT_OF_RANGE, dtype=np.int64)
    pos = {k: i for i, k in enumerate(cells)}
    for cfg in itertools.product(*(range(d) for d in domains)):
        try:
            v = eval_expr(e, lambda key: cfg[pos[key]], functions, consts)
        except OutOfRange:
            continue
        if 0 <= v < out_domain:
            table[cfg] = v
    return FactorTable(tuple(domains), out_domain, table)
