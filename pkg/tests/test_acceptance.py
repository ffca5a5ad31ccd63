"""The ten acceptance criteria, at their stated tolerances.

Each test records a verdict line in ``ACCEPTANCE_RESULTS`` before asserting,
and the terminal summary prints one line per criterion. Statistical
experiments use fixed seeds, so reruns are exact.
"""

import importlib.util
import math
import sys
import time
import warnings

import numpy as np
import pytest
from conftest import (
    ACCEPTANCE_RESULTS,
    GOLDEN,
    fig7_graph,
    fig7_observing,
    max_rel_fd_error,
    min_column,
    parity_graph,
    smt_command,
)

from tptsynth.bench import island_configs, load_task, task_names
from tptsynth.fmgd import VANILLA, Engine, Logits, load_distribution, random_search, train_seeds
from tptsynth.interp import check_consistency, enumerate_solve, execute, solutions
from tptsynth.ir import compile_source
from tptsynth.lp import build_lp, integral_point, solve_lp
from tptsynth.smt import emit_smtlib, solve_smt

ADAPTER = [sys.executable, "-m", "tptsynth.lp.highs_adapter"]
SEEDS = list(range(100))


def record(n, ok, detail):
    ACCEPTANCE_RESULTS[n] = ("PASS" if ok else "FAIL", detail)
    assert ok, f"criterion {n}: {detail}"


def success_rate(graph, hypers=VANILLA, master_seed=0, seeds=SEEDS):
    results = train_seeds(graph, hypers, master_seed, seeds)
    return sum(r.converged for r in results) / len(results)


def random_consistent(graph, rng, n):
    out = []
    while len(out) < n:
        a = {p: int(rng.integers(graph.domains[p])) for p in graph.params}
        a.update(graph.pins)
        if check_consistency(graph, a):
            out.append(a)
    return out


def _regen():
    spec = importlib.util.spec_from_file_location("golden_regen", GOLDEN / "regen.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def test_1_gradients_match_finite_differences():
    started = time.perf_counter()
    worst = {}
    rng = np.random.default_rng(2024)
    for label, g in (("parity K=4", parity_graph(4)), ("parity K=8", parity_graph(8)), ("fig7", fig7_graph())):
        e = Engine(g)
        errs = []
        for _ in range(20):
            logits = Logits(e.groups, [rng.normal(size=(1, len(vs), n)) for n, vs in e.groups])
            errs.append(max_rel_fd_error(e, logits, h=1e-5))
        worst[label] = max(errs)
    elapsed = time.perf_counter() - started
    ok = max(worst.values()) < 1e-5 and elapsed < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {elapsed:.1f} s"
    record(1, ok, f"max relative FD error {detail}")


def test_2_island_configurations_are_stationary():
    started = time.perf_counter()
    m = 40.0
    count, worst_grad, least_loss = 0, 0.0, math.inf
    for K in range(4, 9):
        g = parity_graph(K)
        e = Engine(g)
        for cfg in island_configs(K):
            # Logit m on value 1 for mu = 1, on value 0 for mu = 0, and equal logits for mu = .5.
            rows = {g.var("x", i): [0.0, 0.0] if mu == 0.5 else ([0.0, m] if mu == 1.0 else [m, 0.0]) for i, mu in enumerate(cfg)}
            logits = Logits.from_dict(e, rows)
            loss, grad, _ = e.loss_and_grad(logits)
            worst_grad = max(worst_grad, float(np.abs(grad.flat()).max()))
            least_loss = min(least_loss, float(loss[0]))
            count += 1
    elapsed = time.perf_counter() - started
    ok = count > 0 and worst_grad < 1e-6 and least_loss > 1e-3 and elapsed < 60
    record(2, ok, f"{count} islands, max |grad| {worst_grad:.1e}, min loss {least_loss:.3f}; {elapsed:.1f} s")


@pytest.mark.slow
def test_3_vanilla_success_falls_with_chain_length():
    started = time.perf_counter()
    rates = {K: success_rate(parity_graph(K)) for K in (4, 8, 32)}
    elapsed = time.perf_counter() - started
    ok = rates[4] >= 0.80 and 0.25 <= rates[8] <= 0.80 and rates[32] <= 0.10 and elapsed < 20 * 60
    detail = ", ".join(f"K={K} {r:.0%}" for K, r in rates.items())
    record(3, ok, f"vanilla success {detail}; {elapsed:.0f} s")


@pytest.mark.slow
def test_4_searched_hypers_beat_average_and_vanilla():
    g = parity_graph(8)
    vanilla = success_rate(g)
    rep = random_search(g, load_distribution(None), 20, 20, 0, jobs=1)
    best = success_rate(g, rep.best_setting)
    ok = best >= rep.average_fraction and best >= vanilla
    record(4, ok, f"K=8 best {best:.0%} (search {rep.best_fraction:.0%}), average {rep.average_fraction:.1%}, vanilla {vanilla:.0%}")


SMT_TASKS = ["turing_invert", "turing_prepend_zero", "circuits_controlled_shift", "circuits_full_adder"]


@pytest.mark.slow
def test_5_smt_solves_the_small_program_tasks():
    cmd = smt_command()
    if cmd is None:
        ACCEPTANCE_RESULTS[5] = ("SKIP", "no SMT solver on PATH")
        warnings.warn("criterion 5 skipped: no SMT solver configured")
        pytest.skip("no SMT solver on PATH")
    parts, ok = [], True
    for name in SMT_TASKS:
        g = load_task(name).compile()
        t = time.perf_counter()
        res = solve_smt(emit_smtlib(g.program), cmd, graph=g, timeout=600)
        good = res.status == "sat" and check_consistency(g, res.assignment)
        ok &= good
        parts.append(f"{name} {res.status} {time.perf_counter() - t:.1f} s")
    record(5, ok, "; ".join(parts))


ORACLE_TASKS = ["fig7", "parity_k4", "parity_k8", "parity_k16", "nand_2x2", "unsat_toy"]


def test_6_backends_agree_with_enumeration():
    cmd = smt_command()
    parts, ok = [], True
    for name in ORACLE_TASKS:
        g = load_task(name).compile()
        n_configs = math.prod(g.domains[p] for p in g.free_params)
        assert n_configs <= 2**16
        found = enumerate_solve(g)
        want = found is not None
        sol = solve_lp(build_lp(g, milp=True), ADAPTER)
        milp = sol.status == "optimal"
        agree = milp == want and (not milp or sol.verified)
        if cmd is not None:
            res = solve_smt(emit_smtlib(g.program), cmd, graph=g)
            agree &= (res.status == "sat") == want and res.status in ("sat", "unsat")
        ok &= agree
        parts.append(f"{name} {'sat' if want else 'unsat'}{'' if agree else ' MISMATCH'}")
    note = "" if cmd else " (no SMT solver: MILP only)"
    record(6, ok, ", ".join(parts) + note)


SUBSTITUTION_TASKS = ["fig7", "automaton", "parity_k4", "parity_k8", "nand_2x2"]


def test_7_gate_lp_is_correct():
    fig7 = fig7_graph()
    sol = solve_lp(build_lp(fig7, milp=True), ADAPTER)
    x4 = execute(fig7, sol.assignment).values[fig7.var("X4")] if sol.assignment else None
    ok = sol.verified and x4 == 5

    # The observed models have only a handful of solutions each, so every one
    # of them is substituted, and 20 random draws more are substituted into the
    # same model with its observations dropped (where any fault-free draw is
    # consistent).
    rng = np.random.default_rng(0)
    checked = 0
    for name in SUBSTITUTION_TASKS:
        task = load_task(name)
        observed = task.compile()
        opened = compile_source("\n".join(ln for ln in task.preprocessed().splitlines() if ".observe_value(" not in ln), {})
        draws = [(observed, a) for a in solutions(observed)]
        draws += [(opened, a) for a in random_consistent(opened, rng, 20)]
        for g, a in draws:
            m = build_lp(g)
            ok &= bool(np.abs(m.residuals(integral_point(g, m, a))).max() == 0.0)
            checked += 1

    g = fig7_observing(4)
    forced = min_column(build_lp(g, include_ghosts=False), "mu_X0_g0_0")
    m = build_lp(g)
    witness = {g.var("X0"): 1, g.var("X1"): 0, g.var("X2"): 2}
    admits = check_consistency(g, witness) and np.abs(m.residuals(integral_point(g, m, witness))).max() == 0.0
    free = min_column(m, "mu_X0_g0_0")
    ok &= abs(forced - 1.0) < 1e-9 and admits and free < 1e-9
    record(7, ok, f"fig7 MILP X4={x4}; {checked} substituted assignments; min mu_X0(0) without ghosts {forced:.3f}, with ghosts {free:.3f}")


@pytest.mark.slow
def test_8_redundant_resources_help_nand():
    small = success_rate(load_task("nand_2x2").compile())
    large = success_rate(load_task("nand_3x3").compile())
    ok = large - small >= 0.10
    record(8, ok, f"NAND 3x3 {large:.0%} vs 2x2 {small:.0%}")


@pytest.mark.slow
def test_9_emissions_match_goldens():
    regen = _regen()
    bad, n = [], 0
    for name in task_names():
        for fmt, text in regen.emissions(name).items():
            n += 1
            if not regen.matches_golden(name, fmt, text):
                bad.append(f"{name}.{fmt}")
    record(9, not bad, f"{n - len(bad)}/{n} emissions byte-identical" + (f"; differ: {', '.join(bad)}" if bad else ""))


TABLE_LOG10_D = {
    "turing_invert": 4,
    "turing_prepend_zero": 9,
    "turing_binary_decrement": 9,
    "circuits_controlled_shift": 10,
    "circuits_full_adder": 13,
    "circuits_two_bit_adder": 22,
    "assembly_access": 13,
    "assembly_decrement": 20,
    "assembly_list_k": 29,
}


def test_10_difficulty_matches_the_table():
    off = {}
    for name, want in TABLE_LOG10_D.items():
        got = load_task(name).difficulty()["log10_D"]
        if abs(got - want) > 0.5:
            off[name] = got
    bb = load_task("basic_block_access").difficulty()["log10_D"]
    detail = f"{len(TABLE_LOG10_D) - len(off)}/{len(TABLE_LOG10_D)} rows within 0.5; basic_block_access {bb:.2f} vs 14 (reported only)"
    if off:
        detail += "; off: " + ", ".join(f"{k} {v:.2f}" for k, v in off.items())
    record(10, not off, detail)
