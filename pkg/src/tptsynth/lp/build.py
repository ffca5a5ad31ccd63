"""Gated LP relaxation of a factor graph.

Columns are local marginals. Every variable gets one unary marginal per gate
in which it is active, every factor a marginal over its scope, and every
ghost site an extra unary marginal for the branches where the variable is
not active. Rows tie these together:

* normalization: a gate's unary marginals sum to the gate marginal
  (the parent's marginal of the condition value), or to 1 at the root;
* factor consistency: summing a factor marginal over all but one scope
  variable gives that variable's unary marginal;
* parent/child: a parent marginal is the ghost marginal plus the sum of the
  child marginals over the branches where the variable is active;
* ghost normalization: a ghost marginal sums to the gate marginal mass of
  the branches where the variable is inactive;
* pins for inputs, observations and pinned parameters.

In hard mode (the default) only factor configurations that agree with the
factor's table get a column, so the objective is simply the total factor
mass and any feasible integral point is a valid program.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from tptsynth.ir.graph import ROOT, GatedFactorGraph
from tptsynth.ir.tabulate import OUT_OF_RANGE


def sanitize(label: str) -> str:
    """Make a cell label legal in an LP column name: ``tape[0,3]`` -> ``tape(0,3)``."""
    return label.replace("[", "(").replace("]", ")").replace(" ", "")


@dataclass
class Row:
    name: str
    coeffs: list  # (column index, coefficient)
    sense: str  # "=" | "<=" | ">="
    rhs: float
    kind: str


@dataclass
class LpModel:
    columns: list
    rows: list
    objective: dict  # column index -> coefficient
    binaries: list  # column indices
    milp: bool
    unary: dict = field(default_factory=dict)  # (var, gate, value) -> column
    ghost: dict = field(default_factory=dict)  # (var, family, value) -> column
    factor_cols: dict = field(default_factory=dict)  # factor id -> list of (cfg, column)
    param_cols: dict = field(default_factory=dict)  # (var, value) -> column of the root marginal
    include_ghosts: bool = True
    hard: bool = True
    graph: object = field(default=None, repr=False, compare=False)

    def column(self, name: str) -> int:
        if not hasattr(self, "_names"):
            self._names = {c: i for i, c in enumerate(self.columns)}
        return self._names[name]

    def row_classes(self) -> dict:
        out: dict = {}
        for r in self.rows:
            out[r.kind] = out.get(r.kind, 0) + 1
        return out

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Signed constraint violation per row for the point ``x``."""
        res = np.zeros(len(self.rows))
        for i, r in enumerate(self.rows):
            lhs = sum(c * x[j] for j, c in r.coeffs)
            if r.sense == "=":
                res[i] = lhs - r.rhs
            elif r.sense == "<=":
                res[i] = max(0.0, lhs - r.rhs)
            else:
                res[i] = min(0.0, lhs - r.rhs)
        return res

    def to_arrays(self):
        """Dense-free export: (c, A_eq triplets, b_eq, A_ub triplets, b_ub, integrality)."""
        from scipy.sparse import coo_matrix

        eq_r, eq_c, eq_v, b_eq = [], [], [], []
        ub_r, ub_c, ub_v, b_ub = [], [], [], []
        for r in self.rows:
            if r.sense == "=":
                k = len(b_eq)
                for j, c in r.coeffs:
                    eq_r.append(k), eq_c.append(j), eq_v.append(c)
                b_eq.append(r.rhs)
            else:
                k = len(b_ub)
                sign = 1.0 if r.sense == "<=" else -1.0
                for j, c in r.coeffs:
                    ub_r.append(k), ub_c.append(j), ub_v.append(sign * c)
                b_ub.append(sign * r.rhs)
        n = len(self.columns)
        c = np.zeros(n)
        for j, v in self.objective.items():
            c[j] = v
        A_eq = coo_matrix((eq_v, (eq_r, eq_c)), shape=(len(b_eq), n)).tocsr()
        A_ub = coo_matrix((ub_v, (ub_r, ub_c)), shape=(len(b_ub), n)).tocsr()
        integ = np.zeros(n)
        if self.milp:
            integ[self.binaries] = 1
        return c, A_eq, np.array(b_eq), A_ub, np.array(b_ub), integ


class _Builder:
    def __init__(self, g: GatedFactorGraph, milp: bool, include_ghosts: bool, hard: bool):
        self.g = g
        self.milp = milp
        self.include_ghosts = include_ghosts
        self.hard = hard
        self.columns: list = []
        self.rows: list = []
        self.objective: dict = {}
        self.unary: dict = {}
        self.ghost: dict = {}
        self.factor_cols: dict = {}
        self.vname = [sanitize(n) for n in g.names]

    def col(self, name: str) -> int:
        self.columns.append(name)
        return len(self.columns) - 1

    def row(self, name, coeffs, rhs, kind, sense="="):
        self.rows.append(Row(name, coeffs, sense, float(rhs), kind))

    def mu(self, v, gid, x):
        return self.unary[(v, gid, x)]

    def gate_mass(self, gid):
        """Coefficients expressing the gate marginal of ``gid`` (``None`` at the root)."""
        gate = self.g.gates[gid]
        if gate.parent is None:
            return None
        fam = self.g.families[gate.family]
        return self.mu(fam.var, fam.gate, gate.value)

    def run(self) -> LpModel:
        g = self.g
        # Unary columns, gate by gate.
        for gate in g.gates:
            vars_ = sorted(g.active[gate.id])
            if gate.id == ROOT:
                vars_ = sorted(set(vars_) | set(g.params))
            for v in vars_:
                for x in range(int(g.domains[v])):
                    self.unary[(v, gate.id, x)] = self.col(f"mu_{self.vname[v]}_g{gate.id}_{x}")
        if self.include_ghosts:
            for v, fid in g.ghost_sites:
                for x in range(int(g.domains[v])):
                    self.ghost[(v, fid, x)] = self.col(f"mu_{self.vname[v]}_f{fid}ghost_{x}")
        # Normalization.
        by_gate: dict = {}
        for v, gid, _x in self.unary:
            by_gate.setdefault(gid, set()).add(v)
        for gate in g.gates:
            mass = self.gate_mass(gate.id)
            for v in sorted(by_gate.get(gate.id, ())):
                coeffs = [(self.mu(v, gate.id, x), 1.0) for x in range(int(g.domains[v]))]
                if mass is None:
                    self.row(f"norm~{self.vname[v]}~g{gate.id}", coeffs, 1, "normalization")
                else:
                    self.row(f"norm~{self.vname[v]}~g{gate.id}", coeffs + [(mass, -1.0)], 0, "normalization")
        # The condition variable is fixed inside its own branch.
        for gate in g.gates:
            if gate.parent is None:
                continue
            c = g.families[gate.family].var
            if (c, gate.id, 0) in self.unary:
                for x in range(int(g.domains[c])):
                    if x != gate.value:
                        self.row(f"cond~{self.vname[c]}~g{gate.id}~{x}", [(self.mu(c, gate.id, x), 1.0)], 0, "condition")
        # Factors.
        for f in g.factors:
            self.factor(f)
        # Parent/child and ghost normalization.
        for fam in g.families:
            dom_c = int(g.domains[fam.var])
            branches = fam.branches
            touched = sorted(set().union(*(g.active[b] for b in branches.values())) if branches else set())
            for v in touched:
                act = [k for k, b in branches.items() if v in g.active[b]]
                inactive = [k for k in range(dom_c) if k not in act]
                for x in range(int(g.domains[v])):
                    coeffs = [(self.mu(v, fam.gate, x), 1.0)]
                    coeffs += [(self.mu(v, branches[k], x), -1.0) for k in act]
                    if inactive and self.include_ghosts:
                        coeffs.append((self.ghost[(v, fam.id, x)], -1.0))
                    self.row(f"pc~{self.vname[v]}~F{fam.id}~{x}", coeffs, 0, "parent-child")
                if inactive and self.include_ghosts:
                    coeffs = [(self.ghost[(v, fam.id, x)], 1.0) for x in range(int(g.domains[v]))]
                    coeffs += [(self.mu(fam.var, fam.gate, k), -1.0) for k in inactive]
                    self.row(f"ghost~{self.vname[v]}~F{fam.id}", coeffs, 0, "ghost")
        # Pins.
        for kind, pins in (("input", g.inputs), ("pin", g.pins), ("observation", g.observations)):
            for v, val in pins:
                for x in range(int(g.domains[v])):
                    if x != val:
                        self.row(f"{kind}~{self.vname[v]}~{x}", [(self.mu(v, ROOT, x), 1.0)], 0, kind)
        binaries = []
        param_cols = {}
        for p in g.params:
            for x in range(int(g.domains[p])):
                param_cols[(p, x)] = self.mu(p, ROOT, x)
                binaries.append(self.mu(p, ROOT, x))
        return LpModel(
            self.columns,
            self.rows,
            self.objective,
            binaries if self.milp else [],
            self.milp,
            self.unary,
            self.ghost,
            self.factor_cols,
            param_cols,
            self.include_ghosts,
            self.hard,
            g,
        )

    def factor(self, f):
        g = self.g
        gid = f.gate
        n_out = int(g.domains[f.out])
        flat = f.table.ravel()
        if f.is_copy and not f.leak and n_out == int(g.domains[f.ins[0]]) and self.hard:
            for x in range(n_out):
                self.row(
                    f"copy~f{f.id}~{x}",
                    [(self.mu(f.out, gid, x), 1.0), (self.mu(f.ins[0], gid, x), -1.0)],
                    0,
                    "factor-consistency",
                )
            self.factor_cols[f.id] = []
            return
        dims = f.table.shape
        cfgs = list(itertools.product(*(range(d) for d in dims)))
        cols = []
        for k, cfg in enumerate(cfgs):
            y = int(flat[k])
            if y == OUT_OF_RANGE:
                if self.hard:
                    continue
                outs = range(n_out)
            else:
                outs = (y,) if self.hard else range(n_out)
            for yy in outs:
                tag = ".".join(map(str, cfg)) if cfg else "nil"
                name = f"mus_f{f.id}_g{gid}_{tag}" if self.hard else f"mus_f{f.id}_g{gid}_{tag}_y{yy}"
                j = self.col(name)
                cols.append((cfg, yy, j))
                theta = 1.0 if yy == y else 0.0
                if theta:
                    self.objective[j] = theta
        self.factor_cols[f.id] = cols
        # Output consistency.
        for x in range(n_out):
            coeffs = [(j, 1.0) for cfg, yy, j in cols if yy == x]
            coeffs.append((self.mu(f.out, gid, x), -1.0))
            self.row(f"cons~f{f.id}~{self.vname[f.out]}~{x}", coeffs, 0, "factor-consistency")
        # Input consistency.
        for i, v in enumerate(f.ins):
            for x in range(int(g.domains[v])):
                coeffs = [(j, 1.0) for cfg, yy, j in cols if cfg[i] == x]
                coeffs.append((self.mu(v, gid, x), -1.0))
                self.row(f"cons~f{f.id}~{self.vname[v]}~{x}", coeffs, 0, "factor-consistency")


def build_lp(g: GatedFactorGraph, milp: bool = False, include_ghosts: bool = True, hard: bool = True) -> LpModel:
    """Construct the gated LP (or MILP when ``milp`` marks param marginals binary)."""
    return _Builder(g, milp, include_ghosts, hard).run()


def integral_point(g: GatedFactorGraph, model: LpModel, params) -> np.ndarray:
    """The 0/1 vector a parameter assignment induces: indicators along the executed path.

    Cells that are never assigned on the executed path take value 0 (any
    value works for them, since only ghost marginals carry their mass).
    """
    from tptsynth.interp import execute

    trace = execute(g, params)
    vals = dict(trace.values)

    def value(v):
        return vals.get(v, 0)

    executed = {}
    for gate in g.gates:
        executed[gate.id] = all(vals.get(v) == val for v, val in gate.path)
    x = np.zeros(len(model.columns))
    for (v, gid, xv), j in model.unary.items():
        if executed[gid] and value(v) == xv:
            x[j] = 1.0
    for (v, fid, xv), j in model.ghost.items():
        fam = g.families[fid]
        if not executed[fam.gate]:
            continue
        k = value(fam.var)
        child = fam.branches.get(k)
        if (child is None or v not in g.active[child]) and value(v) == xv:
            x[j] = 1.0
    for f in g.factors:
        if not executed[f.gate]:
            continue
        cfg = tuple(value(v) for v in f.ins)
        y = value(f.out)
        for c, yy, j in model.factor_cols.get(f.id, ()):
            if c == cfg and yy == y:
                x[j] = 1.0
    return x
