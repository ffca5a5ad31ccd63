"""Command-line LP solver: ``python -m tptsynth.lp.highs_adapter model.lp solution.out``.

Reads the CPLEX LP subset written by :func:`tptsynth.lp.emit.emit_lp`,
solves it with HiGHS through :func:`scipy.optimize.milp` and writes a
status line (``optimal``, ``infeasible`` or ``unbounded``) followed by one
``column value`` line per column. Any program that honours this contract
can be plugged in as the external LP solver.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

from tptsynth.errors import TptError
from tptsynth.lp.emit import parse_lp


def solve_text(text: str, time_limit: float | None = None):
    """Return ``(status, {column: value})`` for an LP in the supported subset."""
    lp = parse_lp(text)
    cols = lp["columns"]
    index = {c: i for i, c in enumerate(cols)}
    n = len(cols)
    c = np.zeros(n)
    for name, v in lp["objective"]:
        c[index[name]] += v
    if lp["sense"] == "max":
        c = -c
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    for name, (a, b) in lp["bounds"].items():
        lo[index[name]], hi[index[name]] = a, b
    integ = np.zeros(n)
    for name in lp["binary"]:
        integ[index[name]] = 1
        lo[index[name]] = max(lo[index[name]], 0)
        hi[index[name]] = min(hi[index[name]], 1)
    rr, cc, vv, rlo, rhi = [], [], [], [], []
    for k, (_name, terms, sense, rhs) in enumerate(lp["rows"]):
        for name, v in terms:
            rr.append(k), cc.append(index[name]), vv.append(v)
        rlo.append(rhs if sense in ("=", ">=") else -np.inf)
        rhi.append(rhs if sense in ("=", "<=") else np.inf)
    constraints = []
    if lp["rows"]:
        A = coo_matrix((vv, (rr, cc)), shape=(len(lp["rows"]), n)).tocsr()
        constraints.append(LinearConstraint(A, rlo, rhi))
    if n == 0:
        feasible = all(lo_ <= 0 <= hi_ for lo_, hi_ in zip(rlo, rhi))
        return ("optimal" if feasible else "infeasible"), {}
    options = {"time_limit": time_limit} if time_limit else {}
    res = milp(c, constraints=constraints, integrality=integ, bounds=Bounds(lo, hi), options=options)
    if res.status == 0 and res.x is not None:
        return "optimal", {name: float(res.x[i]) for i, name in enumerate(cols)}
    if res.status == 2:
        return "infeasible", {}
    if res.status == 3:
        return "unbounded", {}
    return "error", {}


def write_solution(path: str, status: str, values: dict) -> None:
    with open(path, "w") as fh:
        fh.write(status + "\n")
        for name, v in values.items():
            fh.write(f"{name} {v!r}\n")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="tptsynth.lp.highs_adapter", description=__doc__.splitlines()[0])
    ap.add_argument("model")
    ap.add_argument("solution")
    ap.add_argument("--time-limit", type=float, default=None)
    args = ap.parse_args(argv)
    try:
        with open(args.model) as fh:
            text = fh.read()
        status, values = solve_text(text, args.time_limit)
    except (OSError, ValueError, TptError) as exc:  # unreadable or malformed input
        print(f"error: {exc}", file=sys.stderr)
        return 3
    write_solution(args.solution, status, values)
    return 0 if status in ("optimal", "infeasible", "unbounded") else 3


if __name__ == "__main__":
    sys.exit(main())
