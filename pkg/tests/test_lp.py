import subprocess
import sys

import numpy as np
import pytest
from conftest import fig7_observing, min_column, parity_graph

from tptsynth.bench import load_task
from tptsynth.errors import SolverError
from tptsynth.interp import check_consistency, enumerate_solve, solutions
from tptsynth.ir import compile_source
from tptsynth.lp import (
    build_lp,
    emit_lp,
    extract_assignment,
    integral_point,
    parse_lp,
    parse_solution,
    sanitize,
    solve_lp,
)
from tptsynth.lp.highs_adapter import solve_text

ADAPTER = [sys.executable, "-m", "tptsynth.lp.highs_adapter"]
SMALL = ["fig7", "automaton", "unsat_toy", "parity_k4", "parity_k8", "nand_2x2"]


def row(model, name):
    (r,) = [r for r in model.rows if r.name == name]
    return {model.columns[j]: c for j, c in r.coeffs}, r.sense, r.rhs


class TestBuild:
    def test_fig7_normalization_row(self, fig7):
        m = build_lp(fig7)
        coeffs, sense, rhs = row(m, "norm~X3~g1")
        assert sense == "=" and rhs == 0
        assert coeffs == {**{f"mu_X3_g1_{x}": 1.0 for x in range(10)}, "mu_X0_g0_0": -1.0}

    def test_fig7_ghost_and_parent_child_rows(self, fig7):
        m = build_lp(fig7)
        coeffs, _, _ = row(m, "ghost~X3~F0")
        assert coeffs == {**{f"mu_X3_f0ghost_{x}": 1.0 for x in range(10)}, "mu_X0_g0_1": -1.0}
        coeffs, _, _ = row(m, "pc~X3~F0~4")
        assert coeffs == {"mu_X3_g0_4": 1.0, "mu_X3_g1_4": -1.0, "mu_X3_f0ghost_4": -1.0}

    def test_fig7_row_classes(self, fig7):
        assert build_lp(fig7).row_classes() == {
            "normalization": 17,
            "condition": 1,
            "factor-consistency": 72,
            "parent-child": 64,
            "ghost": 4,
            "observation": 9,
        }

    def test_parity_has_no_ghosts(self, parity4):
        m = build_lp(parity4)
        assert not m.ghost
        assert m.row_classes() == {"normalization": 8, "factor-consistency": 24, "pin": 1, "observation": 4}
        assert len(m.factor_cols) == 4

    def test_milp_marks_only_param_marginals(self, fig7):
        m = build_lp(fig7, milp=True)
        assert sorted(m.binaries) == sorted(m.param_cols.values())
        assert build_lp(fig7).binaries == []

    def test_soft_mode_has_more_columns(self, fig7):
        assert len(build_lp(fig7, hard=False).columns) > len(build_lp(fig7).columns)

    def test_sanitize(self):
        assert sanitize("tape[0, 3]") == "tape(0,3)"


class TestEmit:
    def test_degenerate_model(self):
        g = compile_source("x = Var(2)\nx.set_to_constant(1)\n", {})
        assert emit_lp(build_lp(g)).splitlines() == [
            "\\ gated LP relaxation",
            "Maximize",
            " obj:",
            "Subject To",
            " norm~x~g0: mu_x_g0_0 + mu_x_g0_1 = 1",
            " input~x~0: mu_x_g0_0 = 0",
            "Bounds",
            " 0 <= mu_x_g0_0 <= 1",
            " 0 <= mu_x_g0_1 <= 1",
            "End",
        ]

    def test_milp_only_adds_binary_section(self, fig7):
        lp = emit_lp(build_lp(fig7)).splitlines()
        milp = emit_lp(build_lp(fig7, milp=True)).splitlines()
        start = milp.index("Binary")
        assert milp[:start] + milp[-1:] == lp
        assert len(milp[start + 1 : -1]) == 14

    def test_lines_are_bounded(self):
        text = emit_lp(build_lp(load_task("nand_2x2").compile()))
        assert max(len(line) for line in text.splitlines()) <= 250
        assert text.endswith("End\n")

    @pytest.mark.parametrize("name", ["fig7", "parity_k4", "nand_2x2"])
    def test_parse_round_trip(self, name):
        m = build_lp(load_task(name).compile(), milp=True)
        lp = parse_lp(emit_lp(m))
        assert lp["sense"] == "max"
        assert len(lp["rows"]) == len(m.rows)
        assert set(lp["columns"]) == set(m.columns)
        for r, (name_, terms, sense, rhs) in zip(m.rows, lp["rows"]):
            assert name_ == r.name and sense == r.sense and rhs == r.rhs
            assert sorted(terms) == sorted((m.columns[j], c) for j, c in r.coeffs)
        assert len(lp["binary"]) == len(m.binaries)

    def test_parse_rejects_garbage(self):
        with pytest.raises(SolverError):
            parse_lp("Maximize\n obj: x\nSubject To\n c1: x + y\nEnd\n")


class TestSolve:
    def test_parity_lp_is_integral(self, parity4):
        sol = solve_lp(build_lp(parity4), ADAPTER)
        assert sol.status == "optimal" and sol.integral
        assert sol.assignment == {p: 0 for p in parity4.params}
        assert sol.verified

    def test_fig7_milp(self, fig7):
        sol = solve_lp(build_lp(fig7, milp=True), ADAPTER)
        assert sol.verified
        from tptsynth.interp import execute

        assert execute(fig7, sol.assignment).values[fig7.var("X4")] == 5

    def test_fallback_matches_enumeration(self, fig7):
        sol = solve_lp(build_lp(fig7))
        assert sol.source == "enumerate"
        assert sol.assignment == enumerate_solve(fig7)

    def test_unsat_is_infeasible(self, unsat_toy):
        assert solve_lp(build_lp(unsat_toy, milp=True), ADAPTER).status == "infeasible"
        assert solve_lp(build_lp(unsat_toy)).status == "no-solution"

    def test_budget(self, fig7):
        assert solve_lp(build_lp(fig7), max_enumerations=2).status == "budget-exhausted"

    def test_failing_command(self, fig7):
        with pytest.raises(SolverError):
            solve_lp(build_lp(fig7), [sys.executable, "-c", "import sys; sys.exit(4)"])

    def test_parse_solution_errors(self, fig7):
        m = build_lp(fig7)
        with pytest.raises(SolverError):
            parse_solution("", m)
        with pytest.raises(SolverError):
            parse_solution("maybe\n", m)
        with pytest.raises(SolverError):
            parse_solution("optimal\nno_such_column 1\n", m)
        assert parse_solution("infeasible\n", m) == ("infeasible", None)

    def test_fractional_points_are_not_rounded(self, fig7):
        m = build_lp(fig7)
        x = np.zeros(len(m.columns))
        for (p, v), j in m.param_cols.items():
            x[j] = 0.5 if fig7.domains[p] == 2 else (1.0 if v == 0 else 0.0)
        assert extract_assignment(m, x) is None

    def test_adapter_cli(self, tmp_path, fig7):
        (tmp_path / "m.lp").write_text(emit_lp(build_lp(fig7, milp=True)))
        proc = subprocess.run(ADAPTER + [str(tmp_path / "m.lp"), str(tmp_path / "s.out")], capture_output=True)
        assert proc.returncode == 0
        assert (tmp_path / "s.out").read_text().startswith("optimal\n")
        bad = subprocess.run(ADAPTER + [str(tmp_path / "missing.lp"), str(tmp_path / "t.out")], capture_output=True)
        assert bad.returncode == 3

    def test_adapter_empty_model(self):
        assert solve_text("Maximize\n obj:\nSubject To\nBounds\nEnd\n") == ("optimal", {})


class TestSubstitution:
    @pytest.mark.parametrize("name", SMALL)
    def test_consistent_assignments_satisfy_every_row(self, name):
        g = load_task(name).compile()
        m = build_lp(g)
        every = list(solutions(g))
        rng = np.random.default_rng(0)
        picks = [every[i] for i in rng.choice(len(every), size=min(20, len(every)), replace=False)] if every else []
        for a in picks:
            assert np.abs(m.residuals(integral_point(g, m, a))).max() == 0.0

    def test_inconsistent_assignment_violates_a_row(self, fig7):
        m = build_lp(fig7)
        a = {fig7.var("X0"): 0, fig7.var("X1"): 0, fig7.var("X2"): 0}
        assert not check_consistency(fig7, a)
        assert np.abs(m.residuals(integral_point(fig7, m, a))).max() > 0


class TestGhosts:
    def test_without_ghosts_the_first_branch_is_forced(self):
        g = fig7_observing(4)
        assert min_column(build_lp(g, include_ghosts=False), "mu_X0_g0_0") == pytest.approx(1.0)

    def test_with_ghosts_the_other_branch_is_reachable(self):
        g = fig7_observing(4)
        m = build_lp(g)
        witness = {g.var("X0"): 1, g.var("X1"): 0, g.var("X2"): 2}
        assert check_consistency(g, witness)
        assert np.abs(m.residuals(integral_point(g, m, witness))).max() == 0.0
        assert min_column(m, "mu_X0_g0_0") == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("K", [4, 6, 8, 10])
def test_parity_feasibility_matches_oracle(K):
    g = parity_graph(K)
    sol = solve_lp(build_lp(g, milp=True), ADAPTER)
    assert (sol.status == "optimal") == (enumerate_solve(g) is not None)
    assert sol.verified
