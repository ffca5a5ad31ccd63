"""Syntax-directed translation of unrolled models into SMT-LIB 2 (QF_LIA).

Every scalar cell that the model mentions becomes one ``Int`` constant with
the bounds ``0 <= v < domain``. Statements become equalities; an ``if``
becomes a pair of implications. Function calls are inlined, with a
function body's ``if``/``return`` structure turned into ``ite`` terms.

Expressions are translated with a type: comparisons and ``not`` give
``Bool`` terms and arithmetic gives ``Int`` terms, with ``(ite b 1 0)`` and
``(distinct t 0)`` coercing between the two where the source mixes them.
Inlined calls also produce side conditions (arguments and result inside the
declared domains), guarded by the path under which the call is evaluated, so
a model the solver returns never makes the reference interpreter fault.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

from tptsynth.errors import TptError
from tptsynth.frontend import ast as A
from tptsynth.frontend.consts import fold
from tptsynth.ir.unroll import UnrolledProgram, unroll

INT, BOOL = "Int", "Bool"

_ARITH = {"+": "+", "-": "-", "*": "*"}
_CMP = {"==": "=", "!=": "distinct", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


class TranslationError(TptError):
    """The expression uses something the SMT encoding cannot express."""


def smt_name(cell: A.Cell) -> str:
    """``tape[0,3]`` -> ``tape_0_3``."""
    return "_".join([cell.name, *map(str, cell.indices)])


def smt_int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def _as_int(term) -> str:
    t, ty = term[0], term[1]
    return t if ty == INT else f"(ite {t} 1 0)"


def _as_bool(term) -> str:
    t, ty = term[0], term[1]
    return t if ty == BOOL else f"(distinct {t} 0)"


def _conj(parts) -> str:
    parts = list(parts)
    if not parts:
        return "true"
    if len(parts) == 1:
        return parts[0]
    return f"(and {' '.join(parts)})"


def _guarded(guard: list, body: str) -> str:
    return body if not guard else f"(=> {_conj(guard)} {body})"


def _span(term):
    """Value interval of a translated term, ``None`` when unknown."""
    if len(term) > 2 and term[2] is not None:
        return term[2]
    return (0, 1) if term[1] == BOOL else None


def _combine(op, a, b):
    if a is None or b is None:
        return None
    (al, ah), (bl, bh) = a, b
    if op == "+":
        return al + bl, ah + bh
    if op == "-":
        return al - bh, ah - bl
    if op == "*":
        ps = [al * bl, al * bh, ah * bl, ah * bh]
        return min(ps), max(ps)
    if op == "/" and bl == bh and bl > 0:
        return al // bl, ah // bl
    if op == "%" and bl == bh and bl > 0:
        return (al, ah) if 0 <= al and ah < bl else (0, bl - 1)
    return None


def _within(span, lo, hi) -> bool:
    return span is not None and lo <= span[0] and span[1] <= hi


class ExprTranslator:
    """Translate expressions; ``side`` collects the domain side conditions of inlined calls.

    Terms are ``(text, type, interval)`` triples. The interval (from cell
    domains and constant arithmetic) lets side conditions that always hold be
    left out, which keeps scripts close to the plain translation.
    """

    def __init__(self, functions: dict, consts: Optional[dict] = None, cell_name: Callable = smt_name, domain=None):
        self.functions = functions
        self.consts = consts or {}
        self.cell_name = cell_name
        self.domain = domain
        self.side: list = []

    def _cell(self, c: A.Cell):
        d = self.domain(c) if self.domain else None
        return self.cell_name(c), INT, ((0, d - 1) if d else None)

    def term(self, e, env: dict, guard: tuple = ()):
        if isinstance(e, A.Num):
            return smt_int(e.value), INT, (e.value, e.value)
        if isinstance(e, A.Cell):
            return self._cell(e)
        if isinstance(e, A.Name):
            if e.id in env:
                return env[e.id]
            if e.id in self.consts:
                v = self.consts[e.id]
                return smt_int(v), INT, (v, v)
            return self._cell(A.Cell(e.id, ()))
        if isinstance(e, A.UnaryOp):
            return f"(not {_as_bool(self.term(e.operand, env, guard))})", BOOL, (0, 1)
        if isinstance(e, A.IfExp):
            b = _as_bool(self.term(e.test, env, guard))
            body = self.term(e.body, env, guard + (b,))
            orelse = self.term(e.orelse, env, guard + (f"(not {b})",))
            sb, so = _span(body), _span(orelse)
            span = (min(sb[0], so[0]), max(sb[1], so[1])) if sb and so else None
            if body[1] == orelse[1]:
                return f"(ite {b} {body[0]} {orelse[0]})", body[1], span
            return f"(ite {b} {_as_int(body)} {_as_int(orelse)})", INT, span
        if isinstance(e, A.BinOp):
            return self.binop(e, env, guard)
        if isinstance(e, A.Call):
            return self.call(e, env, guard)
        raise TranslationError(f"cannot translate {type(e).__name__}")

    def binop(self, e, env, guard):
        op = e.op
        left = self.term(e.left, env, guard)
        if op in ("and", "or"):
            lb = _as_bool(left)
            right = self.term(e.right, env, guard + ((lb if op == "and" else f"(not {lb})"),))
            if left[1] == BOOL and right[1] == BOOL:
                return f"({op} {left[0]} {right[0]})", BOOL, (0, 1)
            # Python semantics: `a and b` is b when a is truthy, else a.
            sl, sr = _span(left), _span(right)
            span = (min(sl[0], sr[0]), max(sl[1], sr[1])) if sl and sr else None
            li, ri = _as_int(left), _as_int(right)
            if op == "and":
                return f"(ite {lb} {ri} {li})", INT, span
            return f"(ite {lb} {li} {ri})", INT, span
        right = self.term(e.right, env, guard)
        if op in _CMP:
            return f"({_CMP[op]} {_as_int(left)} {_as_int(right)})", BOOL, (0, 1)
        a, b = _as_int(left), _as_int(right)
        span = _combine(op, _span(left), _span(right))
        if op in _ARITH:
            return f"({_ARITH[op]} {a} {b})", INT, span
        if op in ("/", "%"):
            return self.division(op, a, b, right), INT, span
        raise TranslationError(f"unsupported operator {op!r}")

    def division(self, op, a, b, rhs):
        # The language uses floor division. For a positive divisor SMT-LIB's
        # div/mod agree with it; a negative constant divisor is rewritten.
        span = _span(rhs)
        if span is None or span[0] != span[1] or span[0] > 0:
            return f"({'div' if op == '/' else 'mod'} {a} {b})"
        d = span[0]
        q = f"(div (- {a}) {-d})"
        return q if op == "/" else f"(- {a} (* {smt_int(d)} {q}))"

    def call(self, e, env, guard):
        fn = self.functions.get(e.func)
        if fn is None:
            raise TranslationError(f"call to unknown function '{e.func}'")
        if len(e.args) != len(fn.params):
            raise TranslationError(f"'{fn.name}' expects {len(fn.params)} arguments")
        conds = []
        inner = {}
        for name, a, d in zip(fn.params, e.args, fn.in_domains):
            t = self.term(a, env, guard)
            ti = _as_int(t)
            if not _within(_span(t), 0, d - 1):
                conds += [f"(>= {ti} 0)", f"(< {ti} {d})"]
            span = _span(t)
            inner[name] = (ti, INT, (max(span[0], 0), min(span[1], d - 1)) if span else (0, d - 1))
        result = self.body(fn, list(fn.body), inner, guard)
        if not _within(_span(result), 0, fn.out_domain - 1):
            conds += [f"(>= {result[0]} 0)", f"(< {result[0]} {fn.out_domain})"]
        if conds:
            self.side.append(_guarded(list(guard), _conj(conds)))
        return result[0], INT, (0, fn.out_domain - 1)

    def body(self, fn, stmts: list, env: dict, guard: tuple):
        """Inline a function body as one Int term (continuation style over ``if``)."""
        for i, s in enumerate(stmts):
            if isinstance(s, A.Assign):
                t = self.term(s.value, env, guard)
                env = {**env, s.name: (_as_int(t), INT, _span(t))}
            elif isinstance(s, A.Return):
                t = self.term(s.value, env, guard)
                return _as_int(t), INT, _span(t)
            elif isinstance(s, A.If):
                rest = stmts[i + 1 :]
                b = _as_bool(self.term(s.test, env, guard))
                then = self.body(fn, list(s.body) + rest, env, guard + (b,))
                other = self.body(fn, list(s.orelse) + rest, env, guard + (f"(not {b})",))
                st, so = _span(then), _span(other)
                span = (min(st[0], so[0]), max(st[1], so[1])) if st and so else None
                return f"(ite {b} {then[0]} {other[0]})", INT, span
            else:
                raise TranslationError(f"'{fn.name}' uses {type(s).__name__}, which cannot be inlined")
        # Falling off the end. Tabulation already proved every in-domain
        # argument reaches a return, and the call's side conditions keep the
        # arguments in their domains, so this branch is dead; any value works.
        return "0", INT, (0, 0)


def translate_expr(expr, functions: Optional[dict] = None, consts: Optional[dict] = None) -> str:
    """Translate one expression to an SMT term (Int-valued unless it is a comparison)."""
    return ExprTranslator(functions or {}, consts).term(expr, {})[0]


def translate_stmt(stmt, functions: Optional[dict] = None, consts: Optional[dict] = None, decls=None) -> list:
    """Constraints for one unrolled statement or declaration."""
    tr = ExprTranslator(functions or {}, consts)
    if isinstance(stmt, (A.DeclInfo, A.VarDecl)):
        return _bounds_for_decl(stmt, consts or {})
    return _stmt(tr, stmt)


def _stmt(tr: ExprTranslator, s) -> list:
    if isinstance(s, (A.SetTo, A.SetToConstant, A.ObserveValue)):
        tr.side = []
        rhs = _as_int(tr.term(s.value, {}))
        lhs = _as_int(tr.term(s.target, {}))
        return [*tr.side, f"(= {lhs} {rhs})"]
    if isinstance(s, A.If):
        tr.side = []
        b = _as_bool(tr.term(s.test, {}))
        test_side = tr.side
        body = [c for x in s.body for c in _stmt(tr, x)]
        orelse = [c for x in s.orelse for c in _stmt(tr, x)]
        out = list(test_side)
        if body:
            out.append(f"(=> {b} (and {' '.join(body)}))")
        if orelse:
            out.append(f"(=> (not {b}) (and {' '.join(orelse)}))")
        return out
    raise TranslationError(f"cannot translate statement {type(s).__name__}")


def _bounds_for_decl(d, consts) -> list:
    if isinstance(d, A.VarDecl):
        dom = fold(d.domain, consts)
        dims = tuple(fold(n, consts) for n in d.dims)
    else:
        dom, dims = d.domain, d.dims
    out = []
    for idx in itertools.product(*(range(n) for n in dims)):
        v = smt_name(A.Cell(d.name, tuple(idx)))
        out += [f"(>= {v} 0)", f"(< {v} {dom})"]
    return out


@dataclass
class SmtScript:
    text: str
    cells: dict = field(default_factory=dict)  # SMT name -> (decl name, indices)
    params: list = field(default_factory=list)  # SMT names of Param cells, declaration order
    n_assertions: int = 0

    def __str__(self) -> str:
        return self.text


def _referenced(stmts) -> set:
    seen = set()

    def expr(e):
        for sub in A.walk_expr(e):
            if isinstance(sub, A.Cell):
                seen.add(sub.key())

    def stmt(s):
        if isinstance(s, A.If):
            expr(s.test)
            for x in s.body + s.orelse:
                stmt(x)
        else:
            expr(s.target)
            expr(s.value)

    for s in stmts:
        stmt(s)
    return seen


def emit_smtlib(program, include_params: bool = True) -> SmtScript:
    """Render an unrolled program (or a checked Ast, unrolled on the fly) as a script.

    Declarations follow cell order and assertions follow statement order, so
    the text is a pure function of the program. Only cells the statements
    mention are declared, except that every Param cell is declared when
    ``include_params`` is set (so the model always names every parameter).
    """
    prog = program if isinstance(program, UnrolledProgram) else unroll(program)
    ast = prog.ast
    used = _referenced(prog.statements)
    lines = ["(set-logic QF_LIA)"]
    bounds = []
    cells = {}
    params = []
    for d, idx in prog.cells():
        key = (d.name, idx)
        if key not in used and not (include_params and d.kind == "Param"):
            continue
        name = smt_name(A.Cell(d.name, idx))
        cells[name] = key
        if d.kind == "Param":
            params.append(name)
        lines.append(f"(declare-const {name} Int)")
        bounds += [f"(>= {name} 0)", f"(< {name} {d.domain})"]
    tr = ExprTranslator(ast.functions, ast.const_decls, domain=lambda c: ast.decl(c.name).domain)
    body = []
    for s in prog.statements:
        body += _stmt(tr, s)
    assertions = bounds + body
    lines += [f"(assert {a})" for a in assertions]
    lines += ["(check-sat)", "(get-model)"]
    return SmtScript("\n".join(lines) + "\n", cells, params, len(assertions))
