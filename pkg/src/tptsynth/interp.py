"""Reference semantics and the brute-force oracle.

``execute`` runs a fully parameterized graph forward, descending only into
gates whose condition holds. ``enumerate_solve`` scans parameter assignments
in lexicographic VarId order and returns the first consistent one.

There is also :func:`execute_ast`, which evaluates a checked program directly
(loops and ``with`` blocks interpreted on the fly) and exists to cross-check
the unroller.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional

from tptsynth.errors import TabulationError
from tptsynth.frontend import ast as A
from tptsynth.frontend.consts import int_binop
from tptsynth.ir.graph import ROOT, GatedFactorGraph
from tptsynth.ir.tabulate import OUT_OF_RANGE, OutOfRange, eval_expr


@dataclass
class ExecTrace:
    assignments: list  # (VarId, value) in execution order
    observed: dict  # VarId -> final value at each observation site (None if unassigned)
    fault: Optional[tuple] = None  # ("leak", factor id)
    values: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.fault is None


class _BudgetExhausted:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "BUDGET_EXHAUSTED"

    def __bool__(self):
        return False


BUDGET_EXHAUSTED = _BudgetExhausted()


class _Program:
    """The graph flattened into per-gate op lists with flat lookup tables."""

    def __init__(self, g: GatedFactorGraph):
        self.g = g
        self.ops = {}
        for gate in g.gates:
            ops = []
            for kind, ref in gate.items:
                if kind == "factor":
                    f = g.factors[ref]
                    shape = f.table.shape
                    strides = []
                    acc = 1
                    for n in reversed(shape):
                        strides.append(acc)
                        acc *= n
                    strides.reverse()
                    ops.append((0, f.out, tuple(zip(f.ins, strides)), f.table.ravel().tolist(), f.id))
                else:
                    fam = g.families[ref]
                    ops.append((1, fam.var, dict(fam.branches), None, fam.id))
            self.ops[gate.id] = ops

    def run(self, values: list, record: Optional[list]):
        """Execute in place; return the faulting factor id or None."""
        stack = [iter(self.ops[ROOT])]
        ops = self.ops
        while stack:
            for kind, a, b, table, ident in stack[-1]:
                if kind == 0:
                    i = 0
                    for v, s in b:
                        i += values[v] * s
                    val = table[i]
                    if val == OUT_OF_RANGE:
                        return ident
                    values[a] = val
                    if record is not None:
                        record.append((a, val))
                else:
                    child = b.get(values[a])
                    if child is not None:
                        stack.append(iter(ops[child]))
                        break
            else:
                stack.pop()
        return None


def _program(g: GatedFactorGraph) -> _Program:
    p = getattr(g, "_interp_program", None)
    if p is None:
        p = _Program(g)
        g._interp_program = p
    return p


def _normalize_params(g: GatedFactorGraph, params) -> dict:
    if isinstance(params, Mapping):
        return dict(params)
    params = list(params)
    if len(params) == len(g.params):
        return dict(zip(g.params, params))
    if len(params) == len(g.free_params):
        out = dict(zip(g.free_params, params))
        out.update(g.pins)
        return out
    raise ValueError(f"expected {len(g.params)} parameter values, got {len(params)}")


def execute(g: GatedFactorGraph, params, inputs=None) -> ExecTrace:
    """Run the graph with ``params`` (mapping VarId -> value, or a sequence in VarId order).

    ``inputs`` replaces the graph's own input sites when given. Leak faults
    are reported in the trace rather than raised.
    """
    params = _normalize_params(g, params)
    values = [None] * g.n_vars
    record: list = []
    for p in g.params:
        if p not in params:
            raise ValueError(f"no value for parameter {g.names[p]}")
        v = int(params[p])
        if not 0 <= v < g.domains[p]:
            raise ValueError(f"value {v} outside the domain of {g.names[p]}")
        values[p] = v
    for v, val in (g.inputs if inputs is None else inputs):
        values[v] = int(val)
        record.append((v, int(val)))
    fault_id = _program(g).run(values, record)
    observed = {v: values[v] for v, _ in g.observations}
    fault = None if fault_id is None else ("leak", fault_id)
    return ExecTrace(record, observed, fault, {i: x for i, x in enumerate(values) if x is not None})


def check_consistency(g: GatedFactorGraph, params) -> bool:
    """True iff running with ``params`` reproduces every observation with no fault and honours pins."""
    params = _normalize_params(g, params)
    for v, val in g.pins:
        if params.get(v) != val:
            return False
    trace = execute(g, params)
    if not trace.ok:
        return False
    return all(trace.observed[v] == val for v, val in g.observations)


def enumerate_solve(g: GatedFactorGraph, max_enumerations: Optional[int] = None, start: int = 0, stop: Optional[int] = None):
    """Return the first consistent assignment in lexicographic order.

    Free params are scanned with the lowest VarId varying slowest; pinned
    params keep their pinned value. Returns ``None`` when the scanned range
    holds no solution and :data:`BUDGET_EXHAUSTED` when ``max_enumerations``
    ran out first. ``start``/``stop`` select a slice of the index space so
    the scan can be split across workers.
    """
    prog = _program(g)
    free = g.free_params
    base = [None] * g.n_vars
    for v, val in g.pins:
        base[v] = val
    for v, val in g.inputs:
        base[v] = val
    obs = list(g.observations)
    ranges = [range(int(g.domains[p])) for p in free]
    total = g.n_param_configs()
    stop = total if stop is None else min(stop, total)
    it = itertools.product(*ranges)
    if start:
        it = itertools.islice(it, start, None)
    count = 0
    for idx in range(start, stop):
        if max_enumerations is not None and count >= max_enumerations:
            return BUDGET_EXHAUSTED
        combo = next(it)
        count += 1
        values = list(base)
        for p, val in zip(free, combo):
            values[p] = val
        if prog.run(values, None) is not None:
            continue
        if all(values[v] == val for v, val in obs):
            return {p: values[p] for p in g.params}
    return None


def solutions(g: GatedFactorGraph, limit: Optional[int] = None):
    """Yield every consistent assignment in enumeration order."""
    prog = _program(g)
    free = g.free_params
    base = [None] * g.n_vars
    for v, val in g.pins:
        base[v] = val
    for v, val in g.inputs:
        base[v] = val
    found = 0
    for combo in itertools.product(*(range(int(g.domains[p])) for p in free)):
        values = list(base)
        for p, val in zip(free, combo):
            values[p] = val
        if prog.run(values, None) is None and all(values[v] == val for v, val in g.observations):
            yield {p: values[p] for p in g.params}
            found += 1
            if limit is not None and found >= limit:
                return


def assignment_to_labels(g: GatedFactorGraph, assignment: Mapping) -> dict:
    return {g.names[v]: int(val) for v, val in sorted(assignment.items())}


def assignment_from_labels(g: GatedFactorGraph, labels: Mapping) -> dict:
    index = {name: i for i, name in enumerate(g.names)}
    out = {}
    for name, val in labels.items():
        if name not in index:
            raise KeyError(f"unknown cell {name}")
        out[index[name]] = int(val)
    return out


# ---------------------------------------------------------------------------
# Direct evaluation of a checked (not unrolled) program.


class _AstLeak(Exception):
    pass


def execute_ast(ast: A.Ast, params: Mapping) -> dict:
    """Evaluate ``ast`` with loops interpreted on the fly.

    ``params`` maps cell keys ``(name, indices)`` to values. Returns the
    final cell values keyed the same way, or raises ``_AstLeak`` (exposed as
    ``execute_ast.Leak``) when an assignment leaves its domain.
    """
    consts = ast.const_decls
    values = dict(params)

    def ct(e, env):
        if isinstance(e, A.Num):
            return e.value
        if isinstance(e, A.Name):
            if e.id in env:
                return env[e.id]
            return consts[e.id]
        if isinstance(e, A.BinOp):
            return int_binop(e.op, ct(e.left, env), ct(e.right, env))
        if isinstance(e, A.UnaryOp):
            return int(not ct(e.operand, env))
        if isinstance(e, A.IfExp):
            return ct(e.body, env) if ct(e.test, env) else ct(e.orelse, env)
        raise TypeError(type(e).__name__)

    def key(target, env):
        if isinstance(target, A.Name):
            return (target.id, ())
        return (target.name, tuple(ct(i, env) for i in target.indices))

    def rt(e, env):
        def lookup(k):
            return values[k]

        def subst(x):
            if isinstance(x, A.Name):
                if x.id in env:
                    return A.Num(env[x.id])
                if x.id in consts:
                    return A.Num(consts[x.id])
                return A.Cell(x.id, ())
            if isinstance(x, A.Index):
                return A.Cell(x.name, tuple(ct(i, env) for i in x.indices))
            if isinstance(x, A.BinOp):
                return A.BinOp(x.op, subst(x.left), subst(x.right))
            if isinstance(x, A.UnaryOp):
                return A.UnaryOp(x.op, subst(x.operand))
            if isinstance(x, A.IfExp):
                return A.IfExp(subst(x.body), subst(x.test), subst(x.orelse))
            if isinstance(x, A.Call):
                return A.Call(x.func, tuple(subst(a) for a in x.args))
            return x

        try:
            return eval_expr(subst(e), lookup, ast.functions, consts)
        except OutOfRange as exc:
            raise _AstLeak(str(exc)) from None

    def block(stmts, env):
        for s in stmts:
            if isinstance(s, A.SetTo):
                k = key(s.target, env)
                v = rt(s.value, env)
                if not 0 <= v < ast.decl(k[0]).domain:
                    raise _AstLeak(f"{k} := {v}")
                values[k] = v
            elif isinstance(s, A.SetToConstant):
                k = key(s.target, env)
                if ast.decl(k[0]).kind == "Var":
                    values[k] = ct(s.value, env)
            elif isinstance(s, A.ObserveValue):
                pass
            elif isinstance(s, A.If):
                if rt(s.test, env):
                    block(s.body, env)
                else:
                    block(s.orelse, env)
            elif isinstance(s, A.For):
                for i in range(ct(s.start, env), ct(s.stop, env)):
                    block(s.body, {**env, s.var: i})
            elif isinstance(s, A.With):
                block(s.body, {**env, s.var: values[key(s.expr, env)]})
            else:
                raise TabulationError(f"unexpected statement {type(s).__name__}")

    block(ast.statements, {})
    return values


execute_ast.Leak = _AstLeak
