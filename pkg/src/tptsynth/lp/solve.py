"""Run an external LP solver on an emitted model and read the answer back."""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from tptsynth.errors import SolverError
from tptsynth.interp import BUDGET_EXHAUSTED, check_consistency, enumerate_solve
from tptsynth.lp.build import LpModel, integral_point
from tptsynth.lp.emit import emit_lp

INTEGRALITY_TOL = 1e-6


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | no-solution | budget-exhausted
    values: Optional[np.ndarray]
    objective: Optional[float]
    integral: bool
    assignment: Optional[dict]
    verified: bool = False
    source: str = "solver"  # solver | enumerate
    output: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def fractional(self) -> bool:
        return self.values is not None and not self.integral


def parse_solution(text: str, model: LpModel):
    """Parse ``status`` plus ``column value`` lines into a dense vector."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SolverError("empty solution file", output=text)
    status = lines[0].split()[0].lower()
    if status not in ("optimal", "infeasible", "unbounded"):
        raise SolverError(f"unrecognized solver status {lines[0]!r}", output=text)
    if status != "optimal":
        return status, None
    x = np.zeros(len(model.columns))
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise SolverError(f"malformed solution line {ln!r}", output=text)
        try:
            j = model.column(parts[0])
            x[j] = float(parts[1])
        except (KeyError, ValueError) as exc:
            raise SolverError(f"malformed solution line {ln!r}", output=text) from exc
    return status, x


def extract_assignment(model: LpModel, x: np.ndarray, tol: float = INTEGRALITY_TOL):
    """Read parameter values off the root marginals; ``None`` if any is fractional."""
    g = model.graph
    out = {}
    for p in g.params:
        vals = [x[model.param_cols[(p, v)]] for v in range(int(g.domains[p]))]
        if any(min(abs(a), abs(a - 1)) > tol for a in vals):
            return None
        ones = [v for v, a in enumerate(vals) if a > 0.5]
        if len(ones) != 1:
            return None
        out[p] = ones[0]
    return out


def _run(command: Union[str, Sequence[str]], model_path: str, sol_path: str, timeout: Optional[float]):
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    try:
        proc = subprocess.run(argv + [model_path, sol_path], capture_output=True, text=True, timeout=timeout)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise SolverError(f"could not run LP solver: {exc}") from exc
    output = proc.stdout + proc.stderr
    if proc.returncode != 0:
        raise SolverError(f"LP solver exited with status {proc.returncode}", output=output)
    if not os.path.exists(sol_path):
        raise SolverError("LP solver wrote no solution file", output=output)
    with open(sol_path) as fh:
        return fh.read(), output


def solve_lp(
    model: LpModel,
    solver_command: Union[str, Sequence[str], None] = None,
    timeout: Optional[float] = None,
    max_enumerations: Optional[int] = None,
) -> LpSolution:
    """Solve ``model`` with an external command, or fall back to enumeration.

    The external command is called as ``<command> <model.lp> <solution.out>``.
    Fractional optima are reported as such, never rounded. Without a command
    the enumerative oracle is run and the integral vertex induced by its
    solution is returned.
    """
    g = model.graph
    if solver_command is None:
        if g is None:
            raise SolverError("the enumerative fallback needs the model's graph")
        a = enumerate_solve(g, max_enumerations=max_enumerations)
        if a is BUDGET_EXHAUSTED:
            return LpSolution("budget-exhausted", None, None, False, None, source="enumerate")
        if not a:
            return LpSolution("no-solution", None, None, False, None, source="enumerate")
        x = integral_point(g, model, a)
        obj = float(sum(c * x[j] for j, c in model.objective.items()))
        return LpSolution("optimal", x, obj, True, dict(a), verified=True, source="enumerate")

    with tempfile.TemporaryDirectory(prefix="tpt-lp-") as tmp:
        mpath = os.path.join(tmp, "model.lp")
        spath = os.path.join(tmp, "solution.out")
        with open(mpath, "w") as fh:
            fh.write(emit_lp(model))
        text, output = _run(solver_command, mpath, spath, timeout)
    status, x = parse_solution(text, model)
    if x is None:
        return LpSolution(status, None, None, False, None, output=output)
    obj = float(sum(c * x[j] for j, c in model.objective.items()))
    integral = bool(np.all(np.minimum(np.abs(x), np.abs(x - 1)) <= INTEGRALITY_TOL))
    assignment = extract_assignment(model, x) if g is not None else None
    verified = False
    if assignment is not None:
        verified = check_consistency(g, assignment)
    return LpSolution(status, x, obj, integral, assignment, verified=verified, output=output)
