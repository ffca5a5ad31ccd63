"""Deterministic text rendering of a gated factor graph (used by golden tests)."""

from __future__ import annotations

from tptsynth.ir.graph import ROOT, GatedFactorGraph


def _path(g: GatedFactorGraph, path) -> str:
    return "(" + ", ".join(f"{g.names[v]}={val}" for v, val in path) + ")"


def dump(g: GatedFactorGraph) -> str:
    out = [f"variables {g.n_vars}"]
    params = set(g.params)
    for v, name in enumerate(g.names):
        kind = "param" if v in params else "var"
        out.append(f"  v{v} {name} dom={int(g.domains[v])} {kind}")
    out.append(f"inputs {len(g.inputs)}")
    out.extend(f"  {g.names[v]} = {val}" for v, val in g.inputs)
    out.append(f"pins {len(g.pins)}")
    out.extend(f"  {g.names[v]} = {val}" for v, val in g.pins)
    out.append(f"observations {len(g.observations)}")
    out.extend(f"  {g.names[v]} == {val}" for v, val in g.observations)
    out.append(f"factors {len(g.factors)}")
    for f in g.factors:
        flags = "".join([" leak" if f.leak else "", " copy" if f.is_copy else ""])
        ins = ", ".join(g.names[v] for v in f.ins)
        out.append(f"  f{f.id} g{f.gate} {g.names[f.out]} <- {f.expr} [{ins}]{flags}")
    out.append("gates")

    def rec(gid, depth):
        gate = g.gates[gid]
        pad = "  " * depth
        head = "root" if gid == ROOT else f"{g.names[g.families[gate.family].var]}=={gate.value} path={_path(g, gate.path)}"
        out.append(f"{pad}g{gid} {head}")
        for kind, ref in gate.items:
            if kind == "factor":
                out.append(f"{pad}  f{ref}")
            else:
                fam = g.families[ref]
                out.append(f"{pad}  F{fam.id} on {g.names[fam.var]}")
                for child in fam.branches.values():
                    rec(child, depth + 2)

    rec(ROOT, 1)
    out.append("active")
    for gate in g.gates:
        names = " ".join(g.names[v] for v in sorted(g.active[gate.id]))
        out.append(f"  g{gate.id}: {names}")
    out.append(f"ghosts {len(g.ghost_sites)}")
    out.extend(f"  {g.names[v]} F{fid}" for v, fid in g.ghost_sites)
    return "\n".join(out) + "\n"
