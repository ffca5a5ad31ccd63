"""Command-line driver: ``tpt <subcommand> ...``.

Exit codes: 0 success (a solution was found or the command completed),
1 no solution (unsat, infeasible, not converged, inconsistent), 2 usage or
input errors, 3 back-end or solver failure. Diagnostics go to stderr;
machine-readable results go to stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import shlex
import shutil
import sys
import time
from pathlib import Path
from typing import Optional

from tptsynth.errors import SmtVerificationError, SolverError, TptError

EXIT_OK, EXIT_NO_SOLUTION, EXIT_USAGE, EXIT_BACKEND = 0, 1, 2, 3

SUITES = {
    "parity": ["parity_k4", "parity_k8", "parity_k16", "parity_k32"],
    "turing": ["turing_invert", "turing_prepend_zero", "turing_binary_decrement"],
    "circuits": ["circuits_controlled_shift", "circuits_full_adder", "circuits_two_bit_adder"],
    "bblock": ["basic_block_access", "basic_block_decrement", "basic_block_list_k"],
    "assembly": ["assembly_access", "assembly_decrement", "assembly_list_k"],
}
SUITE_BACKEND = {"parity": "fmgd", "turing": "smt", "circuits": "smt", "bblock": "smt", "assembly": "smt"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tpt", description="Compile and solve inductive program synthesis models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compile", help="compile a model to a gated factor graph")
    c.add_argument("model")
    c.add_argument("--hypers", help="JSON file of hyperparameter values")
    c.add_argument("--in", dest="inputs", help="input snippet file")
    c.add_argument("--out", dest="outputs", help="output snippet file")
    c.add_argument("--dump-ir", action="store_true", help="print the factor graph")

    s = sub.add_parser("solve", help="solve a task with one back-end")
    s.add_argument("task")
    s.add_argument("--backend", choices=("fmgd", "lp", "smt", "enum"), required=True)
    s.add_argument("--seed", type=int, default=0, help="master seed (fmgd)")
    s.add_argument("--restarts", type=int, default=1, help="random restarts (fmgd)")
    s.add_argument("--solver", help="external solver command (lp, smt)")
    s.add_argument("--hyper-config", help="JSON file of FMGD hyperparameters")
    s.add_argument("--jobs", type=int, default=None)
    s.add_argument("--timeout", type=float, default=None, help="solver timeout in seconds")
    s.add_argument("--max-enumerations", type=int, default=None)

    v = sub.add_parser("verify", help="check a parameter assignment against a task")
    v.add_argument("task")
    v.add_argument("--assignment", required=True, help="JSON file: {cell: value} or a solve report")

    e = sub.add_parser("emit", help="write the task in a solver input format")
    e.add_argument("task")
    e.add_argument("--format", choices=("lp", "smt2", "sk"), required=True)
    e.add_argument("-o", "--output", default="-")
    e.add_argument("--milp", action="store_true", help="mark parameter marginals binary (lp)")

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("--suite", choices=sorted(SUITES), required=True)
    b.add_argument("--backend", choices=("fmgd", "lp", "smt", "enum"), default=None)
    b.add_argument("--report", help="CSV file for the results")
    b.add_argument("--restarts", type=int, default=20)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--solver")
    b.add_argument("--timeout", type=float, default=None)
    b.add_argument("--jobs", type=int, default=None)
    b.add_argument("--tasks", help="comma-separated subset of the suite")

    r = sub.add_parser("search", help="random search over FMGD hyperparameters")
    r.add_argument("task")
    r.add_argument("--settings", type=int, required=True)
    r.add_argument("--seeds", type=int, required=True)
    r.add_argument("--master-seed", type=int, default=0)
    r.add_argument("--distribution", help="JSON hyperparameter distribution")
    r.add_argument("--jobs", type=int, default=None)
    return p


# -- helpers -------------------------------------------------------------------


def _read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _print_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_task(name: str):
    from tptsynth.bench import load_task

    try:
        return load_task(name)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None


def _solver(flag: Optional[str], env: str, fallback: Optional[str] = None) -> Optional[str]:
    if flag:
        return flag
    if os.environ.get(env):
        return os.environ[env]
    if fallback and shutil.which(fallback):
        return fallback
    return None


def _report(backend: str, status: str, metrics: dict, started: float, assignment=None) -> dict:
    out = {
        "backend": backend,
        "status": status,
        "metrics": metrics,
        "wall_ms": round((time.perf_counter() - started) * 1000.0, 3),
    }
    if assignment is not None:
        out["assignment"] = assignment
    return out


# -- back-ends -------------------------------------------------------------------


def solve_task(task, backend: str, args) -> tuple:
    """Run one back-end; returns ``(report, exit_code)``."""
    from tptsynth.interp import BUDGET_EXHAUSTED, assignment_to_labels, enumerate_solve

    started = time.perf_counter()
    g = task.compile()
    base = {"task": task.name, "n_vars": g.n_vars, "n_factors": len(g.factors), "n_params": len(g.params)}

    if backend == "enum":
        a = enumerate_solve(g, max_enumerations=getattr(args, "max_enumerations", None))
        if a is BUDGET_EXHAUSTED:
            return _report(backend, "budget-exhausted", base, started), EXIT_NO_SOLUTION
        if a is None:
            return _report(backend, "no-solution", base, started), EXIT_NO_SOLUTION
        return _report(backend, "solved", base, started, assignment_to_labels(g, a)), EXIT_OK

    if backend == "fmgd":
        from tptsynth.fmgd import VANILLA, FmgdHyperparams, train_seeds

        hypers = VANILLA
        if getattr(args, "hyper_config", None):
            hypers = FmgdHyperparams.from_dict(_read_json(args.hyper_config))
        restarts = max(1, args.restarts)
        results = train_seeds(g, hypers, args.seed, list(range(restarts)))
        wins = [r for r in results if r.converged]
        metrics = {
            **base,
            "restarts": restarts,
            "successes": len(wins),
            "success_rate": len(wins) / restarts,
            "epochs": [r.epochs for r in results],
            "final_loss": [r.final_loss for r in results],
            "hypers": hypers.to_dict(),
        }
        if not wins:
            return _report(backend, "not-converged", metrics, started), EXIT_NO_SOLUTION
        return _report(backend, "solved", metrics, started, assignment_to_labels(g, wins[0].assignment)), EXIT_OK

    if backend == "lp":
        from tptsynth.lp import build_lp, solve_lp

        model = build_lp(g, milp=True)
        cmd = _solver(args.solver, "TPT_LP_SOLVER")
        if cmd is None:
            cmd = f"{shlex.quote(sys.executable)} -m tptsynth.lp.highs_adapter"
        elif cmd == "enumerate":
            cmd = None
        sol = solve_lp(model, cmd, timeout=getattr(args, "timeout", None))
        metrics = {
            **base,
            "columns": len(model.columns),
            "rows": len(model.rows),
            "row_classes": model.row_classes(),
            "solver": cmd or "enumerate",
            "objective": sol.objective,
            "integral": sol.integral,
        }
        if sol.status != "optimal":
            return _report(backend, sol.status, metrics, started), EXIT_NO_SOLUTION
        if sol.assignment is None:
            return _report(backend, "fractional", metrics, started), EXIT_NO_SOLUTION
        if not sol.verified:
            return _report(backend, "unverified", metrics, started), EXIT_BACKEND
        return _report(backend, "solved", metrics, started, assignment_to_labels(g, sol.assignment)), EXIT_OK

    if backend == "smt":
        from tptsynth.smt import emit_smtlib, solve_smt

        cmd = _solver(args.solver, "TPT_SMT_SOLVER", fallback="z3")
        if cmd is None:
            raise SolverError("no SMT solver configured: pass --solver or set TPT_SMT_SOLVER")
        script = emit_smtlib(g.program)
        res = solve_smt(script, cmd, graph=g, timeout=getattr(args, "timeout", None))
        metrics = {**base, "assertions": script.n_assertions, "solver": cmd}
        if res.status != "sat":
            return _report(backend, res.status, metrics, started), EXIT_NO_SOLUTION
        return _report(backend, "solved", metrics, started, assignment_to_labels(g, res.assignment)), EXIT_OK

    raise UsageError(f"unknown backend {backend}")


# -- subcommands ----------------------------------------------------------------------


def cmd_compile(args) -> int:
    from tptsynth.ir import compile_source, dump

    source = Path(args.model).read_text()
    hypers = _read_json(args.hypers) if args.hypers else {}
    inp = Path(args.inputs).read_text() if args.inputs else None
    out = Path(args.outputs).read_text() if args.outputs else None
    g = compile_source(source, hypers, inp, out)
    if args.dump_ir:
        text = dump(g)
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        _print_json(
            {
                "n_vars": g.n_vars,
                "n_params": len(g.params),
                "n_free_params": len(g.free_params),
                "n_factors": len(g.factors),
                "n_gates": len(g.gates),
                "n_ghost_sites": len(g.ghost_sites),
                "n_observations": len(g.observations),
            }
        )
    return EXIT_OK


def cmd_solve(args) -> int:
    task = _load_task(args.task)
    report, code = solve_task(task, args.backend, args)
    _print_json(report)
    return code


def cmd_verify(args) -> int:
    from tptsynth.interp import assignment_from_labels, check_consistency, execute

    task = _load_task(args.task)
    g = task.compile()
    data = _read_json(args.assignment)
    labels = data.get("assignment", data) if isinstance(data, dict) else None
    if not isinstance(labels, dict):
        raise UsageError("assignment file must hold a JSON object")
    try:
        a = assignment_from_labels(g, labels)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    missing = [g.names[p] for p in g.free_params if p not in a]
    if missing:
        raise UsageError(f"assignment leaves {len(missing)} parameter(s) unset, e.g. {missing[0]}")
    for v, val in g.pins:
        a.setdefault(v, val)
    trace = execute(g, a)
    out = {"task": task.name, "consistent": bool(check_consistency(g, a))}
    if trace.fault:
        out["fault"] = " ".join(map(str, trace.fault))
    bad = {g.names[v]: trace.observed.get(v) for v, want in g.observations if trace.observed.get(v) != want}
    if bad:
        out["mismatches"] = bad
    _print_json(out)
    return EXIT_OK if out["consistent"] else EXIT_NO_SOLUTION


def cmd_emit(args) -> int:
    task = _load_task(args.task)
    if args.format == "sk":
        from tptsynth.sketch_emit import emit_sketch

        text = emit_sketch(task.checked()).text
    else:
        g = task.compile()
        if args.format == "lp":
            from tptsynth.lp import build_lp, emit_lp

            text = emit_lp(build_lp(g, milp=args.milp))
        else:
            from tptsynth.smt import emit_smtlib

            text = emit_smtlib(g.program).text
    _write_text(args.output, text)
    return EXIT_OK


def cmd_bench(args) -> int:
    backend = args.backend or SUITE_BACKEND[args.suite]
    names = SUITES[args.suite]
    if args.tasks:
        wanted = [t.strip() for t in args.tasks.split(",") if t.strip()]
        unknown = [t for t in wanted if t not in names]
        if unknown:
            raise UsageError(f"not in suite {args.suite}: {', '.join(unknown)}")
        names = wanted
    rows = []
    for name in names:
        task = _load_task(name)
        try:
            report, _code = solve_task(task, backend, args)
        except (SolverError, TptError) as exc:
            report = {"backend": backend, "status": "error", "metrics": {"error": str(exc)}, "wall_ms": None}
        m = report["metrics"]
        d = task.difficulty() or {}
        rows.append(
            {
                "task": name,
                "backend": backend,
                "status": report["status"],
                "success_rate": m.get("success_rate", 1.0 if report["status"] == "solved" else 0.0),
                "wall_ms": report["wall_ms"],
                "log10_D": round(d["log10_D"], 2) if d else "",
                "n_vars": m.get("n_vars", ""),
                "n_factors": m.get("n_factors", ""),
            }
        )
        print(f"{name}: {report['status']} ({report['wall_ms']} ms)", file=sys.stderr)
    if args.report:
        with open(args.report, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    _print_json(rows)
    return EXIT_OK


def cmd_search(args) -> int:
    from tptsynth.fmgd import load_distribution, random_search

    task = _load_task(args.task)
    g = task.compile()
    dist = load_distribution(args.distribution)
    started = time.perf_counter()
    rep = random_search(g, dist, args.settings, args.seeds, args.master_seed, jobs=args.jobs)
    out = rep.to_dict()
    out["task"] = task.name
    out["wall_ms"] = round((time.perf_counter() - started) * 1000.0, 3)
    _print_json(out)
    return EXIT_OK if rep.best_fraction > 0 else EXIT_NO_SOLUTION


COMMANDS = {
    "compile": cmd_compile,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "emit": cmd_emit,
    "bench": cmd_bench,
    "search": cmd_search,
}


def run(argv) -> int:
    """Run one command; returns the exit code."""
    try:
        args = _parser().parse_args(list(argv))
    except UsageError as exc:
        print(f"tpt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"tpt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SmtVerificationError as exc:
        print(f"tpt: SMT model failed verification: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except SolverError as exc:
        print(f"tpt: solver failure: {exc}", file=sys.stderr)
        if exc.output:
            print(exc.output.rstrip()[-2000:], file=sys.stderr)
        return EXIT_BACKEND
    except TptError as exc:
        print(f"tpt: {type(exc).__name__}: {exc}", file=sys.stderr)
        for d in getattr(exc, "diagnostics", None) or ():
            print(f"  {d}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"tpt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
