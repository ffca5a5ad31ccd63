"""Gated factor graph construction.

Each scalar cell becomes a variable, each ``set_to`` a deterministic factor
with a dense table, and each ``if`` chain on one variable a *family* of gates
(one gate per handled condition value). Gates nest, and a gate's path
condition is its parent's path plus its own ``(var, value)`` pair.

A variable is *active* in a gate when the gate lies on the path between the
variable's definition and one of its uses, which here means it is read,
written or branched on inside the gate or one of its descendants. A *ghost
site* ``(X, F)`` is recorded when ``X`` is active in some but not all
branches of family ``F``; the LP back-end needs an extra marginal there.

Definedness follows a simple rule: after a family, a variable counts as
defined only if every value of the condition variable has a branch that
assigns it. Reading a variable that only some branches assign is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from tptsynth.errors import GraphError, TabulationError
from tptsynth.frontend import ast as A
from tptsynth.frontend.printer import format_expr
from tptsynth.ir.tabulate import OUT_OF_RANGE, tabulate_expr
from tptsynth.ir.unroll import UnrolledProgram

ROOT = 0


@dataclass(frozen=True)
class Factor:
    id: int
    out: int
    ins: tuple
    table: np.ndarray  # shape = domains of ins; OUT_OF_RANGE marks leak entries
    leak: bool
    gate: int
    is_copy: bool
    expr: str
    loc: tuple = (0, 0)


@dataclass
class Gate:
    id: int
    parent: Optional[int]
    family: Optional[int]
    value: Optional[int]
    path: tuple
    items: list = field(default_factory=list)  # ("factor", fid) | ("family", famid)
    children: list = field(default_factory=list)


@dataclass
class Family:
    """The sibling gates produced by one ``if``/``elif`` chain on ``var``."""

    id: int
    gate: int
    var: int
    branches: dict  # condition value -> gate id, ascending by value
    loc: tuple = (0, 0)


@dataclass
class GatedFactorGraph:
    names: list
    cells: list  # (decl name, indices) per VarId
    domains: np.ndarray
    params: tuple
    inputs: list  # (var, value), global scope
    observations: list  # (var, value), global scope
    pins: list  # (param var, value) from set_to_constant on a Param
    factors: list
    gates: list
    families: list
    active: dict  # gate id -> frozenset of VarId
    ghost_sites: list  # (var, family id)
    program: Optional[UnrolledProgram] = None
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {c: i for i, c in enumerate(self.cells)}

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def var(self, name: str, *indices: int) -> int:
        try:
            return self._index[(name, tuple(indices))]
        except KeyError:
            raise KeyError(f"no cell {A.Cell(name, tuple(indices)).label()}") from None

    def label(self, v: int) -> str:
        return self.names[v]

    @property
    def free_params(self) -> tuple:
        pinned = {v for v, _ in self.pins}
        return tuple(p for p in self.params if p not in pinned)

    def n_param_configs(self, include_pinned: bool = False) -> int:
        ps = self.params if include_pinned else self.free_params
        n = 1
        for p in ps:
            n *= int(self.domains[p])
        return n

    def used_vars(self) -> frozenset:
        return self.active[ROOT]

    def walk(self, gate_id: int = ROOT):
        """Yield ``(kind, obj)`` pairs depth-first in statement order."""
        for kind, ref in self.gates[gate_id].items:
            if kind == "factor":
                yield "factor", self.factors[ref]
            else:
                fam = self.families[ref]
                yield "family", fam
                for g in fam.branches.values():
                    yield from self.walk(g)


class _Builder:
    def __init__(self, prog: UnrolledProgram):
        self.prog = prog
        self.names: list = []
        self.cells: list = []
        doms = []
        self.index: dict = {}
        params = []
        for d, idx in prog.cells():
            vid = len(self.cells)
            self.index[(d.name, idx)] = vid
            self.cells.append((d.name, idx))
            self.names.append(A.Cell(d.name, idx).label())
            doms.append(d.domain)
            if d.kind == "Param":
                params.append(vid)
        self.domains = np.array(doms, dtype=np.int64)
        self.params = tuple(params)
        self.param_set = set(params)
        self.factors: list = []
        self.gates: list = [Gate(ROOT, None, None, None, ())]
        self.families: list = []
        self.uses: dict = {ROOT: set()}
        self.inputs: list = []
        self.observations: list = []
        self.pins: list = []
        self.table_cache: dict = {}

    def vid(self, c: A.Cell) -> int:
        return self.index[c.key()]

    def use(self, v: int, gate: int):
        g = gate
        while g is not None:
            s = self.uses.setdefault(g, set())
            if v in s and g != gate:
                break
            s.add(v)
            g = self.gates[g].parent

    # -- expressions ---------------------------------------------------------
    def read_cells(self, e, out: list):
        for sub in A.walk_expr(e):
            if isinstance(sub, A.Cell) and sub.key() not in out:
                out.append(sub.key())
        return out

    def check_read(self, key, scope, loc):
        v = self.index[key]
        if v in scope["defined"]:
            return v
        label = self.names[v]
        if v in scope["partial"]:
            raise GraphError(
                f"'{label}' is read here but only some branches of an earlier conditional assign it",
                loc[0] or None,
                loc[1] or None,
            )
        raise GraphError(f"'{label}' is read before it is assigned", loc[0] or None, loc[1] or None)

    def table_for(self, expr, keys, out_dom) -> np.ndarray:
        rename = {k: A.Name(f"${i}") for i, k in enumerate(keys)}

        def norm(e):
            if isinstance(e, A.Cell):
                return rename[e.key()]
            if isinstance(e, A.BinOp):
                return A.BinOp(e.op, norm(e.left), norm(e.right))
            if isinstance(e, A.UnaryOp):
                return A.UnaryOp(e.op, norm(e.operand))
            if isinstance(e, A.IfExp):
                return A.IfExp(norm(e.body), norm(e.test), norm(e.orelse))
            if isinstance(e, A.Call):
                return A.Call(e.func, tuple(norm(a) for a in e.args))
            return e

        doms = tuple(int(self.domains[self.index[k]]) for k in keys)
        nexpr = norm(expr)
        ck = (nexpr, doms, out_dom)
        t = self.table_cache.get(ck)
        if t is None:
            names = [f"${i}" for i in range(len(keys))]
            try:
                ft = tabulate_expr(nexpr, names, doms, out_dom, self.prog.functions, self.prog.ast.const_decls)
            except TabulationError as exc:
                raise TabulationError(exc.message, expr.loc[0] or None, expr.loc[1] or None) from None
            t = ft.table
            t.setflags(write=False)
            self.table_cache[ck] = t
        return t

    def add_factor(self, out_v, expr, gate, scope, loc):
        keys = self.read_cells(expr, [])
        ins = tuple(self.check_read(k, scope, loc) for k in keys)
        out_dom = int(self.domains[out_v])
        table = self.table_for(expr, keys, out_dom)
        leak = bool((table == OUT_OF_RANGE).any())
        if leak and gate == ROOT:
            raise GraphError(
                f"assignment to '{self.names[out_v]}' can produce values outside its domain {{0..{out_dom - 1}}} "
                "and is not guarded by a condition",
                loc[0] or None,
                loc[1] or None,
            )
        fid = len(self.factors)
        self.factors.append(
            Factor(fid, out_v, ins, table, leak, gate, isinstance(expr, A.Cell), format_expr(expr), loc)
        )
        self.gates[gate].items.append(("factor", fid))
        for v in ins:
            self.use(v, gate)
        self.use(out_v, gate)

    # -- statements ------------------------------------------------------------
    def define(self, v, scope, loc):
        if v in scope["defined"] or v in scope["partial"]:
            raise GraphError(f"'{self.names[v]}' is assigned more than once", loc[0] or None, loc[1] or None)
        scope["defined"].add(v)
        scope["new"].add(v)

    def block(self, stmts, gate, scope):
        for s in stmts:
            self.stmt(s, gate, scope)

    def stmt(self, s, gate, scope):
        loc = s.loc
        if isinstance(s, A.SetTo):
            v = self.vid(s.target)
            if v in self.param_set:
                raise GraphError(f"Param '{self.names[v]}' cannot be assigned", loc[0] or None, loc[1] or None)
            self.add_factor(v, s.value, gate, scope, loc)
            self.define(v, scope, loc)
        elif isinstance(s, A.SetToConstant):
            v = self.vid(s.target)
            val = s.value.value
            if v in self.param_set:
                if gate != ROOT:
                    raise GraphError("Params may only be pinned at global scope", loc[0] or None, loc[1] or None)
                if any(p == v for p, _ in self.pins):
                    raise GraphError(f"Param '{self.names[v]}' pinned twice", loc[0] or None, loc[1] or None)
                self.pins.append((v, val))
                self.use(v, ROOT)
            elif gate == ROOT:
                self.define(v, scope, loc)
                self.inputs.append((v, val))
                self.use(v, ROOT)
            else:
                self.add_factor(v, A.Num(val), gate, scope, loc)
                self.define(v, scope, loc)
        elif isinstance(s, A.ObserveValue):
            v = self.vid(s.target)
            if gate != ROOT:
                raise GraphError("observe_value is only supported at global scope", loc[0] or None, loc[1] or None)
            self.check_read(s.target.key(), scope, loc)
            self.observations.append((v, s.value.value))
            self.use(v, ROOT)
        elif isinstance(s, A.If):
            self.family(s, gate, scope)
        else:
            raise GraphError(f"unexpected statement {type(s).__name__}", loc[0] or None, loc[1] or None)

    def family(self, s: A.If, gate, scope):
        cond_cell = s.test.left
        c = self.check_read(cond_cell.key(), scope, s.loc)
        dom = int(self.domains[c])
        bodies: dict = {}
        node = s
        remainder: tuple = ()
        while True:
            val = node.test.right.value
            if 0 <= val < dom and val not in bodies:
                bodies[val] = node.body
            orelse = node.orelse
            if (
                len(orelse) == 1
                and isinstance(orelse[0], A.If)
                and orelse[0].test.left.key() == cond_cell.key()
            ):
                node = orelse[0]
                continue
            remainder = orelse
            break
        if remainder:
            for val in range(dom):
                bodies.setdefault(val, remainder)
        self.use(c, gate)
        fam_id = len(self.families)
        fam = Family(fam_id, gate, c, {}, s.loc)
        self.families.append(fam)
        self.gates[gate].items.append(("family", fam_id))
        parent_path = self.gates[gate].path
        full_sets, written = [], set()
        for val in sorted(bodies):
            gid = len(self.gates)
            self.gates.append(Gate(gid, gate, fam_id, val, parent_path + ((c, val),)))
            self.gates[gate].children.append(gid)
            self.uses.setdefault(gid, set())
            fam.branches[val] = gid
            child = {"defined": set(scope["defined"]), "partial": set(scope["partial"]), "new": set(), "newpartial": set()}
            self.block(bodies[val], gid, child)
            full_sets.append(child["new"])
            written |= child["new"] | child["newpartial"]
        exported = set.intersection(*full_sets) if len(bodies) == dom else set()
        partial = written - exported
        scope["defined"] |= exported
        scope["new"] |= exported
        scope["partial"] |= partial
        scope["newpartial"] |= partial

    def run(self) -> GatedFactorGraph:
        scope = {"defined": set(self.params), "partial": set(), "new": set(), "newpartial": set()}
        self.block(self.prog.statements, ROOT, scope)
        active = {g.id: frozenset(self.uses.get(g.id, ())) for g in self.gates}
        ghosts = []
        for fam in self.families:
            dom = int(self.domains[fam.var])
            per_branch = [active[g] for g in fam.branches.values()]
            touched = set().union(*per_branch) if per_branch else set()
            for v in sorted(touched):
                n_active = sum(1 for a in per_branch if v in a)
                if n_active < dom:
                    ghosts.append((v, fam.id))
        return GatedFactorGraph(
            names=self.names,
            cells=self.cells,
            domains=self.domains,
            params=self.params,
            inputs=self.inputs,
            observations=self.observations,
            pins=self.pins,
            factors=self.factors,
            gates=self.gates,
            families=self.families,
            active=active,
            ghost_sites=ghosts,
            program=self.prog,
        )


def build_graph(prog: UnrolledProgram) -> GatedFactorGraph:
    """Lower an unrolled program to a :class:`GatedFactorGraph`."""
    return _Builder(prog).run()

