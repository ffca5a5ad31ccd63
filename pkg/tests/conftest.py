import shutil
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import linprog

from tptsynth.bench import corpus_root, load_task
from tptsynth.fmgd import Logits
from tptsynth.ir import compile_source

MODELS = corpus_root() / "models"
GOLDEN = Path(__file__).resolve().parent / "golden"

ACCEPTANCE_RESULTS: dict = {}


def model_source(rel: str) -> str:
    return (MODELS / rel).read_text()


def parity_graph(K: int):
    return compile_source(model_source("parity/parity_chain.tpt"), {"const_K": K})


def fig7_graph():
    return compile_source(model_source("toy/fig7.tpt"), {})


def fig7_observing(value):
    src = model_source("toy/fig7.tpt").replace("X4.observe_value(5)", f"X4.observe_value({value})")
    return compile_source(src, {})


def saturated(engine, assignment, scale=40.0):
    """Logits putting weight ``scale`` on the assigned value of every variable in the engine."""
    values = {}
    for n, vars_ in engine.groups:
        for v in vars_:
            row = np.zeros(n)
            row[assignment[v]] = scale
            values[v] = row
    return Logits.from_dict(engine, values)


def max_rel_fd_error(engine, logits, h=1e-5):
    """Worst relative gap between the reverse-mode gradient and central differences."""
    loss, grad, _ = engine.loss_and_grad(logits)
    flat, g = logits.flat(), grad.flat()
    worst = 0.0
    for i in range(flat.shape[1]):
        up, down = flat.copy(), flat.copy()
        up[0, i] += h
        down[0, i] -= h
        num = (engine.forward(logits.unflat(up)).loss[0] - engine.forward(logits.unflat(down)).loss[0]) / (2 * h)
        scale = max(abs(num), abs(g[0, i]))
        if scale > 1e-7:
            worst = max(worst, abs(num - g[0, i]) / scale)
    return worst


def min_column(model, name):
    """Minimum of one LP column over the relaxation's feasible set."""
    c, A_eq, b_eq, A_ub, b_ub, _ = model.to_arrays()
    obj = np.zeros(len(model.columns))
    obj[model.column(name)] = 1.0
    res = linprog(
        obj,
        A_eq=A_eq if A_eq.shape[0] else None,
        b_eq=b_eq if A_eq.shape[0] else None,
        A_ub=A_ub if A_ub.shape[0] else None,
        b_ub=b_ub if A_ub.shape[0] else None,
        bounds=(0, 1),
        method="highs",
    )
    assert res.status == 0
    return res.fun


def smt_command():
    return shutil.which("z3")


@pytest.fixture(scope="session")
def fig7():
    return fig7_graph()


@pytest.fixture(scope="session")
def parity4():
    return parity_graph(4)


@pytest.fixture(scope="session")
def unsat_toy():
    return load_task("unsat_toy").compile()


@pytest.fixture(scope="session")
def z3_cmd():
    cmd = smt_command()
    if cmd is None:
        pytest.skip("no SMT solver on PATH")
    return cmd


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        verdict, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {detail}")
