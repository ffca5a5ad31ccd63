"""Run an SMT solver on an emitted script and read the model back."""

from __future__ import annotations

import os
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from tptsynth.errors import SmtVerificationError, SolverError
from tptsynth.smt.translate import SmtScript

_DEFINE = re.compile(r"\(define-fun\s+(\S+)\s+\(\)\s+Int\s+(\(\s*-\s*\d+\s*\)|-?\d+)\s*\)")


@dataclass
class SmtResult:
    status: str  # sat | unsat | unknown
    params: Optional[dict] = None  # (decl name, indices) -> value
    assignment: Optional[dict] = None  # graph VarId -> value, when a graph was given
    output: str = ""
    extra: dict = field(default_factory=dict)


def parse_model(text: str) -> dict:
    """``{name: int}`` for every ``(define-fun name () Int n)`` in solver output."""
    out = {}
    for name, raw in _DEFINE.findall(text):
        raw = raw.strip()
        if raw.startswith("("):
            out[name] = -int(raw.strip("()").replace("-", "", 1).strip())
        else:
            out[name] = int(raw)
    return out


def _status(text: str) -> str:
    for line in text.splitlines():
        word = line.strip()
        if word in ("sat", "unsat", "unknown"):
            return word
        if word:
            break
    raise SolverError("solver output does not start with sat, unsat or unknown", output=text)


def solve_smt(
    script: Union[SmtScript, str],
    solver_command: Union[str, Sequence[str]] = "z3",
    graph=None,
    timeout: Optional[float] = None,
) -> SmtResult:
    """Run ``<command> <file.smt2>`` and decode the model.

    With a ``graph`` the decoded parameters are checked by the interpreter;
    a model that fails that check raises :class:`SmtVerificationError`,
    since it means the translation and the reference semantics disagree.
    """
    text = script.text if isinstance(script, SmtScript) else str(script)
    argv = shlex.split(solver_command) if isinstance(solver_command, str) else list(solver_command)
    with tempfile.TemporaryDirectory(prefix="tpt-smt-") as tmp:
        path = os.path.join(tmp, "model.smt2")
        with open(path, "w") as fh:
            fh.write(text)
        try:
            proc = subprocess.run(argv + [path], capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            return SmtResult("unknown", output=f"timeout after {exc.timeout}s")
        except OSError as exc:
            raise SolverError(f"could not run SMT solver: {exc}") from exc
    output = proc.stdout
    if not output.strip():
        raise SolverError(f"SMT solver exited with status {proc.returncode} and no output", output=proc.stderr)
    status = _status(output)
    if status != "sat":
        return SmtResult(status, output=output)
    values = parse_model(output)
    if isinstance(script, SmtScript):
        missing = [n for n in script.params if n not in values]
        params = {script.cells[n]: values.get(n, 0) for n in script.params}
    else:
        missing, params = [], {}
        for n, v in values.items():
            params[n] = v
    if not values and isinstance(script, SmtScript) and script.params:
        raise SolverError("solver reported sat but printed no model", output=output)
    result = SmtResult("sat", params=params, output=output, extra={"defaulted": missing})
    if graph is not None and isinstance(script, SmtScript):
        from tptsynth.interp import check_consistency

        assignment = {graph.var(name, *idx): v for (name, idx), v in params.items()}
        if not check_consistency(graph, assignment):
            raise SmtVerificationError(
                "the solver's model does not reproduce the observations under the interpreter", output=output
            )
        result.assignment = assignment
    return result
