"""Forward marginal propagation and its reverse-mode derivative.

The graph is compiled once into a flat list of instructions over numbered
*slots*; each slot holds a batch of marginal vectors with shape ``(B, N)``,
where the batch axis runs over independent restarts. Three instructions exist:

``factor``
    Push the product of the input marginals through the factor's one-hot
    output matrix, renormalizing when the table can leak.
``mix``
    Leave a family of gates: average each child's marginal by the gate
    marginal of the condition variable.
``param``
    Softmax of a parameter's logits.

Entering a gate costs nothing: the child scope simply reuses the parent's
slots, except that the condition variable is replaced by a point mass on the
branch value.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from tptsynth.errors import NumericError
from tptsynth.ir.graph import ROOT, GatedFactorGraph
from tptsynth.ir.tabulate import OUT_OF_RANGE

_LETTERS = string.ascii_lowercase.replace("b", "")


def _onehot(n: int, k: int) -> np.ndarray:
    v = np.zeros((1, n))
    if 0 <= k < n:
        v[0, k] = 1.0
    return v


@dataclass
class _Factor:
    out: int
    ins: tuple
    dims: tuple
    M: np.ndarray  # (K, N_out) one-hot rows, zero rows for leak entries
    leak: bool
    fid: int
    fwd_subs: str = ""
    bwd_subs: tuple = ()


@dataclass
class _Mix:
    out: int
    cond: int
    children: tuple  # (value, slot)


class Logits:
    """Parameter logits for a batch of runs.

    Free parameters are grouped by domain size; ``data[i]`` has shape
    ``(B, P_i, N_i)`` and ``groups[i] = (N_i, (var ids...))``.
    """

    def __init__(self, groups, data):
        self.groups = tuple(groups)
        self.data = [np.asarray(d, dtype=np.float64) for d in data]

    @property
    def batch_size(self) -> int:
        return self.data[0].shape[0] if self.data else 1

    def copy(self) -> "Logits":
        return Logits(self.groups, [d.copy() for d in self.data])

    def cell(self, var: int, b: int = 0) -> np.ndarray:
        for (n, vars_), d in zip(self.groups, self.data):
            if var in vars_:
                return d[b, vars_.index(var)]
        raise KeyError(var)

    def select(self, b) -> "Logits":
        """Sub-batch ``b`` (an int or an index array)."""
        idx = np.atleast_1d(b)
        return Logits(self.groups, [d[idx] for d in self.data])

    def as_dict(self, b: int = 0) -> dict:
        out = {}
        for (n, vars_), d in zip(self.groups, self.data):
            for j, v in enumerate(vars_):
                out[v] = d[b, j].copy()
        return out

    @classmethod
    def from_dict(cls, engine: "Engine", values: dict) -> "Logits":
        data = []
        for n, vars_ in engine.groups:
            data.append(np.array([[np.asarray(values[v], dtype=np.float64) for v in vars_]]).reshape(1, len(vars_), n))
        return cls(engine.groups, data)

    def flat(self) -> np.ndarray:
        """``(B, total)`` view of all logits, groups concatenated."""
        B = self.batch_size
        return np.concatenate([d.reshape(B, -1) for d in self.data], axis=1) if self.data else np.zeros((B, 0))

    def unflat(self, flat: np.ndarray) -> "Logits":
        out, pos = [], 0
        for (n, vars_), d in zip(self.groups, self.data):
            size = n * len(vars_)
            out.append(flat[:, pos : pos + size].reshape(flat.shape[0], len(vars_), n))
            pos += size
        return Logits(self.groups, out)


def softmax(m: np.ndarray) -> np.ndarray:
    z = m - m.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class Tape:
    values: list  # slot -> (B, N)
    mu: list  # per group softmax (B, P, N)
    loss: np.ndarray  # (B,)
    batch: int
    norms: dict  # factor output slot -> Z, for leak-renormalized factors


class Engine:
    """Compiled forward/backward program for one graph."""

    def __init__(self, graph: GatedFactorGraph, epsilon: float = 1e-12):
        self.graph = graph
        self.epsilon = float(epsilon)
        g = graph
        pinned = dict(g.pins)
        by_dom: dict = {}
        for p in g.free_params:
            by_dom.setdefault(int(g.domains[p]), []).append(p)
        self.groups = tuple((n, tuple(vs)) for n, vs in sorted(by_dom.items()))
        self.n_slots = 0
        self.consts: dict = {}  # slot -> (1, N) constant
        self.param_slots: list = []  # (slot, group, j)
        self.program: list = []
        self.slot_info: list = []  # slot -> (var, gate) for diagnostics
        env: dict = {}
        for gi, (n, vs) in enumerate(self.groups):
            for j, v in enumerate(vs):
                s = self._new(v, ROOT)
                self.param_slots.append((s, gi, j))
                env[v] = s
        for v, val in pinned.items():
            env[v] = self._const(int(g.domains[v]), val, v, ROOT)
        for v, val in g.inputs:
            env[v] = self._const(int(g.domains[v]), val, v, ROOT)
        self._compile_gate(ROOT, env)
        self.root_env = env
        self.obs = [(env[v], val, v) for v, val in g.observations]

    # -- compilation -----------------------------------------------------------
    def _new(self, var, gate) -> int:
        s = self.n_slots
        self.n_slots += 1
        self.slot_info.append((var, gate))
        return s

    def _const(self, n, k, var, gate) -> int:
        s = self._new(var, gate)
        self.consts[s] = _onehot(n, k)
        return s

    def _compile_gate(self, gid: int, env: dict) -> set:
        g = self.graph
        defined: set = set()
        for kind, ref in g.gates[gid].items:
            if kind == "factor":
                f = g.factors[ref]
                n_out = int(g.domains[f.out])
                if not f.ins:
                    env[f.out] = self._const(n_out, int(f.table[()]), f.out, gid)
                else:
                    flat = f.table.ravel()
                    M = np.zeros((flat.size, n_out))
                    ok = flat != OUT_OF_RANGE
                    M[np.nonzero(ok)[0], flat[ok]] = 1.0
                    out = self._new(f.out, gid)
                    dims = tuple(f.table.shape)
                    fac = _Factor(out, tuple(env[v] for v in f.ins), dims, M, f.leak, f.id)
                    k = len(dims)
                    if k > 1:
                        letters = _LETTERS[:k]
                        fac.fwd_subs = ",".join("b" + c for c in letters) + "->b" + letters
                        fac.bwd_subs = tuple(
                            "b" + letters + "," + ",".join("b" + c for c in letters if c != letters[i]) + "->b" + letters[i]
                            for i in range(k)
                        )
                    self.program.append(fac)
                    env[f.out] = out
                defined.add(f.out)
            else:
                fam = g.families[ref]
                n_c = int(g.domains[fam.var])
                cond = env[fam.var]
                branch_envs, branch_defs = [], []
                for val, child in fam.branches.items():
                    cenv = dict(env)
                    cenv[fam.var] = self._const(n_c, val, fam.var, child)
                    branch_defs.append(self._compile_gate(child, cenv))
                    branch_envs.append((val, cenv))
                if len(fam.branches) == n_c and branch_defs:
                    exported = set.intersection(*branch_defs)
                else:
                    exported = set()
                for v in sorted(exported):
                    out = self._new(v, gid)
                    self.program.append(_Mix(out, cond, tuple((val, ce[v]) for val, ce in branch_envs)))
                    env[v] = out
                defined |= exported
        return defined

    # -- evaluation --------------------------------------------------------------
    def forward(self, logits: Logits, check_finite: bool = True) -> Tape:
        B = logits.batch_size
        vals: list = [None] * self.n_slots
        for s, c in self.consts.items():
            vals[s] = np.broadcast_to(c, (B, c.shape[1]))
        mu = [softmax(d) for d in logits.data]
        for s, gi, j in self.param_slots:
            vals[s] = mu[gi][:, j, :]
        norms: dict = {}
        for ins in self.program:
            if isinstance(ins, _Factor):
                if len(ins.ins) == 1:
                    W = vals[ins.ins[0]]
                else:
                    W = np.einsum(ins.fwd_subs, *(vals[s] for s in ins.ins)).reshape(B, -1)
                u = W @ ins.M
                if ins.leak:
                    Z = u.sum(axis=1, keepdims=True)
                    safe = np.where(Z > 0, Z, 1.0)
                    u = np.where(Z > 0, u / safe, 0.0)
                    norms[ins.out] = Z
                vals[ins.out] = u
            else:
                acc = None
                c = vals[ins.cond]
                for k, s in ins.children:
                    term = c[:, k : k + 1] * vals[s]
                    acc = term if acc is None else acc + term
                vals[ins.out] = acc
        eps = self.epsilon
        loss = np.zeros(B)
        for s, val, _v in self.obs:
            loss -= np.log(np.maximum(vals[s][:, val], eps))
        if check_finite and not np.all(np.isfinite(loss)):
            self._raise_nonfinite(vals)
        return Tape(vals, mu, loss, B, norms)

    def _raise_nonfinite(self, vals):
        for s, v in enumerate(vals):
            if v is not None and not np.all(np.isfinite(v)):
                var, gate = self.slot_info[s]
                raise NumericError(
                    f"non-finite marginal for {self.graph.names[var]} in gate g{gate}", site=(var, gate)
                )
        raise NumericError("non-finite loss")

    def backward(self, tape: Tape, extra_mu_grad=None) -> list:
        """Gradient of ``tape.loss`` (summed over the batch) w.r.t. the logits.

        ``extra_mu_grad`` optionally adds per-group gradients with respect to
        the parameter softmaxes (used for the entropy bonus).
        """
        B = tape.batch
        vals = tape.values
        grads: list = [None] * self.n_slots
        eps = self.epsilon

        def add(s, g):
            if s in self.consts:
                return
            grads[s] = g if grads[s] is None else grads[s] + g

        for s, val, _v in self.obs:
            x = vals[s][:, val]
            g = np.zeros((B, vals[s].shape[1]))
            g[:, val] = np.where(x > eps, -1.0 / np.maximum(x, eps), 0.0)
            add(s, g)
        for ins in reversed(self.program):
            go = grads[ins.out]
            if go is None:
                continue
            if isinstance(ins, _Factor):
                if ins.leak:
                    out = vals[ins.out]
                    Z = tape.norms[ins.out]
                    safe = np.where(Z > 0, Z, 1.0)
                    go = np.where(Z > 0, (go - (go * out).sum(axis=1, keepdims=True)) / safe, 0.0)
                gW = go @ ins.M.T
                if len(ins.ins) == 1:
                    add(ins.ins[0], gW)
                else:
                    gWr = gW.reshape((B,) + ins.dims)
                    for i, s in enumerate(ins.ins):
                        if s in self.consts:
                            continue
                        others = [vals[t] for j, t in enumerate(ins.ins) if j != i]
                        add(s, np.einsum(ins.bwd_subs[i], gWr, *others))
            else:
                c = vals[ins.cond]
                gc = np.zeros_like(c) if ins.cond not in self.consts else None
                for k, s in ins.children:
                    add(s, c[:, k : k + 1] * go)
                    if gc is not None:
                        gc[:, k] += (go * vals[s]).sum(axis=1)
                if gc is not None:
                    add(ins.cond, gc)
        gmu = [np.zeros_like(m) for m in tape.mu]
        for s, gi, j in self.param_slots:
            if grads[s] is not None:
                gmu[gi][:, j, :] += grads[s]
        if extra_mu_grad is not None:
            for gi, e in enumerate(extra_mu_grad):
                gmu[gi] += e
        out = []
        for m, gm in zip(tape.mu, gmu):
            out.append(m * (gm - (gm * m).sum(axis=-1, keepdims=True)))
        return out

    def loss_and_grad(self, logits: Logits):
        tape = self.forward(logits)
        return tape.loss, Logits(logits.groups, self.backward(tape)), tape

    # -- helpers -----------------------------------------------------------------
    def output_marginals(self, tape: Tape) -> dict:
        return {v: tape.values[s] for s, _val, v in self.obs}

    def global_marginals(self, tape: Tape) -> dict:
        """Final root-scope marginal of every variable that has one."""
        return {v: np.asarray(tape.values[s]) for v, s in self.root_env.items()}

    def site_marginals(self, tape: Tape):
        """Yield ``(var, gate, marginal)`` for every computed slot."""
        for s, (var, gate) in enumerate(self.slot_info):
            yield var, gate, np.asarray(tape.values[s])


def entropy(mu: np.ndarray, eps: float) -> np.ndarray:
    """Entropy of each distribution along the last axis with the clamped log."""
    return -(mu * np.log(np.maximum(mu, eps))).sum(axis=-1)


def entropy_grad(mu: np.ndarray, eps: float) -> np.ndarray:
    return -(np.log(np.maximum(mu, eps)) + (mu > eps))
