import sys
import textwrap

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from tptsynth.bench import load_task
from tptsynth.errors import SmtVerificationError, SolverError
from tptsynth.frontend import ast as A
from tptsynth.frontend import check_semantics, parse_source
from tptsynth.frontend.consts import ConstEvalError, int_binop
from tptsynth.interp import check_consistency, enumerate_solve
from tptsynth.ir import compile_source, unroll
from tptsynth.smt import emit_smtlib, parse_model, smt_name, solve_smt, translate_expr, translate_stmt

PARITY_FN = "@CompileMe([2, 2], 2)\ndef Parity(x, y): return (x + y) % 2\n"


def statements(src):
    ast = check_semantics(parse_source(src))
    return ast, unroll(ast).statements


def fake_solver(tmp_path, output):
    """A solver command that ignores its input and prints ``output``."""
    script = tmp_path / "solver.py"
    script.write_text(f"import sys\nsys.stdout.write({output!r})\n")
    return [sys.executable, str(script)]


class TestTranslateExpr:
    def test_sum(self):
        assert translate_expr(A.BinOp("+", A.Cell("a", ()), A.Cell("b", ()))) == "(+ a b)"

    def test_inlined_parity(self):
        ast = check_semantics(parse_source(PARITY_FN))
        call = A.Call("Parity", (A.Cell("x", ()), A.Cell("y", ())))
        assert translate_expr(call, ast.functions) == "(mod (+ x y) 2)"

    def test_negated_comparison(self):
        expr = A.UnaryOp("not", A.BinOp("==", A.Cell("a", ()), A.Cell("b", ())))
        assert translate_expr(expr) == "(not (= a b))"

    def test_indexed_cell_name(self):
        assert smt_name(A.Cell("tape", (0, 3))) == "tape_0_3"
        assert translate_expr(A.Cell("tape", (0, 3))) == "tape_0_3"


class TestTranslateStmt:
    def test_set_to(self):
        _, (_, stmt) = statements("x = Var(2)\ny = Var(2)\ny.set_to_constant(1)\nx.set_to(y)\n")
        assert translate_stmt(stmt) == ["(= x y)"]

    def test_param_bounds(self):
        decl = parse_source("v = Param(3)\n").body[0]
        assert translate_stmt(decl) == ["(>= v 0)", "(< v 3)"]

    def test_if_else_gives_two_implications(self):
        ast, stmts = statements(
            "c = Param(2)\nx = Var(2)\nif c == 1:\n    x.set_to_constant(0)\nelse:\n    x.set_to_constant(1)\n"
        )
        assert translate_stmt(stmts[0], ast.functions) == [
            "(=> (= c 1) (and (= x 0)))",
            "(=> (not (= c 1)) (and (= x 1)))",
        ]


class TestEmit:
    def test_automaton_declares_rule_table(self):
        text = emit_smtlib(load_task("automaton").compile().program).text
        lines = text.splitlines()
        assert lines[0] == "(set-logic QF_LIA)"
        assert "(declare-const ruleTable_0_0 Int)" in lines
        assert "(assert (>= ruleTable_0_0 0))" in lines
        assert "(assert (< ruleTable_0_0 2))" in lines
        assert lines[-2:] == ["(check-sat)", "(get-model)"]

    def test_parity_has_one_equality_per_link(self, parity4):
        text = emit_smtlib(parity4.program).text
        assert text.count("(mod (+ ") == 4
        assert "(assert (= y_0 (mod (+ x_0 x_1) 2)))" in text

    def test_declarations_precede_assertions(self, fig7):
        lines = emit_smtlib(fig7.program).text.splitlines()
        decls = [i for i, ln in enumerate(lines) if ln.startswith("(declare-const")]
        asserts = [i for i, ln in enumerate(lines) if ln.startswith("(assert")]
        assert max(decls) < min(asserts)
        assert [ln.split()[1] for ln in lines if ln.startswith("(declare-const")] == ["X0", "X1", "X2", "X3", "X4"]

    def test_emission_is_deterministic(self):
        a = emit_smtlib(load_task("nand_2x2").compile().program).text
        b = emit_smtlib(load_task("nand_2x2").compile().program).text
        assert a == b

    def test_script_metadata(self, fig7):
        script = emit_smtlib(fig7.program)
        assert script.params == ["X0", "X1", "X2"]
        assert script.cells["X2"] == ("X2", ())
        assert script.n_assertions == script.text.count("(assert ")


class TestParseModel:
    def test_positive_and_negative(self):
        out = "sat\n(\n  (define-fun x () Int\n    3)\n  (define-fun y () Int (- 4))\n)\n"
        assert parse_model(out) == {"x": 3, "y": -4}

    def test_ignores_non_int(self):
        assert parse_model("(define-fun b () Bool true)") == {}


class TestSolveWithFakeSolver:
    def test_wrong_model_fails_verification(self, tmp_path, fig7):
        out = "sat\n(model (define-fun X0 () Int 0) (define-fun X1 () Int 0) (define-fun X2 () Int 0))\n"
        with pytest.raises(SmtVerificationError):
            solve_smt(emit_smtlib(fig7.program), fake_solver(tmp_path, out), graph=fig7)

    def test_right_model_is_decoded(self, tmp_path, fig7):
        out = "sat\n(model (define-fun X0 () Int 0) (define-fun X1 () Int 1) (define-fun X2 () Int 4))\n"
        res = solve_smt(emit_smtlib(fig7.program), fake_solver(tmp_path, out), graph=fig7)
        assert res.status == "sat"
        assert res.params == {("X0", ()): 0, ("X1", ()): 1, ("X2", ()): 4}
        assert res.assignment == {0: 0, 1: 1, 2: 4}

    def test_unknown(self, tmp_path, fig7):
        assert solve_smt(emit_smtlib(fig7.program), fake_solver(tmp_path, "unknown\n")).status == "unknown"

    def test_garbage_output(self, tmp_path, fig7):
        with pytest.raises(SolverError):
            solve_smt(emit_smtlib(fig7.program), fake_solver(tmp_path, "(error \"boom\")\n"))

    def test_missing_binary(self, fig7):
        with pytest.raises(SolverError):
            solve_smt(emit_smtlib(fig7.program), "/nonexistent/solver")

    def test_timeout_is_unknown(self, tmp_path, fig7):
        script = tmp_path / "slow.py"
        script.write_text("import time\ntime.sleep(10)\n")
        res = solve_smt(emit_smtlib(fig7.program), [sys.executable, str(script)], timeout=0.5)
        assert res.status == "unknown"


class TestZ3:
    def test_fig7(self, z3_cmd, fig7):
        res = solve_smt(emit_smtlib(fig7.program), z3_cmd, graph=fig7)
        assert res.status == "sat"
        assert check_consistency(fig7, res.assignment)

    def test_unsat_toy(self, z3_cmd, unsat_toy):
        assert solve_smt(emit_smtlib(unsat_toy.program), z3_cmd, graph=unsat_toy).status == "unsat"
        assert enumerate_solve(unsat_toy) is None

    def test_guarded_leak_model(self, z3_cmd):
        src = textwrap.dedent(
            """\
            @CompileMe([4], 2)
            def largeTest(x): return 1 if x >= 2 else 0
            @CompileMe([4], 4)
            def makeSmall(x): return x - 2
            X = Param(4)
            out = Var(4)
            isLarge = Var(2)
            isLarge.set_to(largeTest(X))
            if isLarge == 0:
                out.set_to(X)
            elif isLarge == 1:
                out.set_to(makeSmall(X))
            out.observe_value(1)
            """
        )
        g = compile_source(src, {})
        res = solve_smt(emit_smtlib(g.program), z3_cmd, graph=g)
        assert res.status == "sat"
        assert res.params[("X", ())] in (1, 3)


# -- properties: translated terms evaluate like the interpreter ----------------------


def _tokens(text):
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _read(tokens):
    tok = tokens.pop(0)
    if tok != "(":
        return tok
    out = []
    while tokens[0] != ")":
        out.append(_read(tokens))
    tokens.pop(0)
    return out


def smt_eval(term, env):
    if isinstance(term, str):
        if term in env:
            return env[term]
        if term in ("true", "false"):
            return term == "true"
        return int(term)
    op, *args = term
    if op == "ite":
        return smt_eval(args[1], env) if smt_eval(args[0], env) else smt_eval(args[2], env)
    vals = [smt_eval(a, env) for a in args]
    if op == "-" and len(vals) == 1:
        return -vals[0]
    table = {
        "+": lambda a, b: a + b,
        "-": lambda a, b: a - b,
        "*": lambda a, b: a * b,
        "div": lambda a, b: a // b if b > 0 else -(a // -b),
        "mod": lambda a, b: a % abs(b),
        "=": lambda a, b: a == b,
        "distinct": lambda a, b: a != b,
        "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b,
        ">": lambda a, b: a > b,
        ">=": lambda a, b: a >= b,
        "=>": lambda a, b: (not a) or b,
    }
    if op == "not":
        return not vals[0]
    if op == "and":
        return all(vals)
    if op == "or":
        return any(vals)
    return table[op](*vals)


def py_eval(e, env):
    if isinstance(e, A.Num):
        return e.value
    if isinstance(e, A.Cell):
        return env[e.name]
    if isinstance(e, A.UnaryOp):
        return int(not py_eval(e.operand, env))
    if isinstance(e, A.IfExp):
        return py_eval(e.body, env) if py_eval(e.test, env) else py_eval(e.orelse, env)
    return int_binop(e.op, py_eval(e.left, env), py_eval(e.right, env))


OPS = ["+", "-", "*", "/", "%", "==", "!=", "<", "<=", ">", ">=", "and", "or"]
leaves = st.integers(0, 6).map(A.Num) | st.sampled_from(["a", "b"]).map(lambda n: A.Cell(n, ()))


def _grow(children):
    return (
        st.tuples(st.sampled_from(OPS), children, children).map(lambda t: A.BinOp(*t))
        | children.map(lambda e: A.UnaryOp("not", e))
        | st.tuples(children, children, children).map(lambda t: A.IfExp(t[0], t[1], t[2]))
    )


@settings(max_examples=300, deadline=None)
@given(st.recursive(leaves, _grow, max_leaves=8), st.integers(0, 5), st.integers(0, 5))
def test_translation_agrees_with_interpreter(expr, a, b):
    env = {"a": a, "b": b}
    try:
        expected = py_eval(expr, env)
    except ConstEvalError:
        assume(False)
    # Division by a negative number never arises in well-typed programs
    # (domains are non-negative), so only non-negative operands are drawn.
    got = smt_eval(_read(_tokens(translate_expr(expr))), env)
    assert int(got) == expected
