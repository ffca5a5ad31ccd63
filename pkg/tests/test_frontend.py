import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tptsynth.bench import load_task, task_names
from tptsynth.errors import LexError, ParseError, PreprocessError, SemanticError
from tptsynth.frontend import (
    ast as A,
    check_semantics,
    diagnose,
    format_expr,
    format_program,
    parse_source,
    preprocess,
    tokenize,
)
from tptsynth.frontend.consts import fold


def kinds(source):
    return [(t.kind, t.text) for t in tokenize(source)]


class TestLexer:
    def test_param_declaration(self):
        assert kinds("x = Param(2)")[:6] == [
            ("identifier", "x"),
            ("operator", "="),
            ("keyword", "Param"),
            ("punctuation", "("),
            ("integer-literal", "2"),
            ("punctuation", ")"),
        ]

    def test_for_header_ends_with_colon_and_newline(self):
        toks = kinds("for k in range(K):\n    x.set_to(0)\n")
        assert toks[:2] == [("keyword", "for"), ("identifier", "k")]
        colon = toks.index(("punctuation", ":"))
        assert toks[colon + 1][0] == "newline"
        assert toks[colon + 2][0] == "indent"

    def test_tab_indentation_is_rejected(self):
        with pytest.raises(LexError) as info:
            tokenize("x = Param(2)\n\ty.set_to(x)")
        assert info.value.line == 2

    def test_positions_are_one_based(self):
        t = tokenize("x = Param(2)")[2]
        assert (t.line, t.column) == (1, 5)

    def test_comments_and_blank_lines_are_skipped(self):
        assert kinds("# hello\n\nx = Var(2)  # trailing\n") == kinds("x = Var(2)\n")


class TestPreprocess:
    def test_hyperparameter_substitution(self):
        out = preprocess("const_K = #__HYPERPARAM_const_K__\n", {"const_K": 5})
        assert out.strip() == "const_K = 5"

    def test_identity_without_directives(self):
        src = "x = Var(2)\nx.set_to_constant(1)\n"
        assert preprocess(src, {}, None, None) == src

    def test_snippet_keeps_directive_indent(self):
        src = "if 1 == 1:\n    #__IMPORT_OBSERVED_INPUTS__\n"
        out = preprocess(src, {}, "tape[0].set_to_constant(1)", None)
        assert "    tape[0].set_to_constant(1)" in out.splitlines()

    def test_missing_binding(self):
        with pytest.raises(PreprocessError):
            preprocess("const_K = #__HYPERPARAM_const_K__\n", {})


class TestParser:
    def test_param_with_dims(self):
        (decl,) = parse_source("ruleTable = Param(2)[2, 2]\n").body
        assert decl == A.VarDecl("ruleTable", "Param", A.Num(2), (A.Num(2), A.Num(2)))

    def test_observe_indexed(self):
        (stmt,) = parse_source("y[k].observe_value(0)\n").body
        assert isinstance(stmt, A.ObserveValue)
        assert stmt.value == A.Num(0)
        assert format_expr(stmt.target) == "y[k]"

    def test_unterminated_call(self):
        with pytest.raises(ParseError) as info:
            parse_source("x.set_to(")
        assert info.value.expected

    @pytest.mark.parametrize("name", task_names())
    def test_corpus_round_trip(self, name):
        program = parse_source(load_task(name).preprocessed())
        assert parse_source(format_program(program)) == program


class TestSemantics:
    def test_sibling_branches_may_assign_the_same_cell(self):
        src = (
            "c = Param(2)\n"
            "tape = Var(2)[3]\n"
            "if c == 0:\n"
            "    tape[2].set_to(0)\n"
            "elif c == 1:\n"
            "    tape[2].set_to(1)\n"
        )
        ast, diags = diagnose(parse_source(src))
        assert ast is not None
        assert not [d for d in diags if d.severity == "error"]

    def test_double_assignment_is_an_ssa_error(self):
        src = "x = Var(5)\nx.set_to_constant(1)\nx.set_to_constant(2)\n"
        _, diags = diagnose(parse_source(src))
        assert [d.code for d in diags] == ["ssa"]
        assert diags[0].line == 3

    def test_constant_outside_domain(self):
        with pytest.raises(SemanticError) as info:
            check_semantics(parse_source("x = Var(5)\nx.set_to_constant(7)\n"))
        assert info.value.diagnostics[0].code == "domain"

    def test_diagnostics_are_deterministic(self):
        src = "x = Var(2)\ny = Var(2)\nx.set_to(z)\nx.set_to(y)\ny.set_to_constant(5)\n"
        first = diagnose(parse_source(src))[1]
        second = diagnose(parse_source(src))[1]
        assert first == second
        assert first == sorted(first, key=lambda d: (d.line, d.column))

    @pytest.mark.parametrize("name", task_names())
    def test_corpus_checks_cleanly(self, name):
        ast, diags = diagnose(parse_source(load_task(name).preprocessed()))
        assert ast is not None
        assert [d for d in diags if d.severity == "error"] == []


# -- properties ------------------------------------------------------------------

leaf = st.integers(0, 50).map(A.Num) | st.sampled_from(["a", "b", "c"]).map(A.Name)


def _node(children):
    binop = st.tuples(st.sampled_from(["+", "-", "*", "==", "!=", "<", ">=", "and", "or"]), children, children)
    return binop.map(lambda t: A.BinOp(t[0], t[1], t[2])) | children.map(lambda e: A.UnaryOp("not", e))


expressions = st.recursive(leaf, _node, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(expressions)
def test_expression_printing_round_trips(expr):
    (stmt,) = parse_source(f"x.set_to({format_expr(expr)})\n").body
    assert stmt.value == expr


def _py(op, a, b):
    return {
        "+": a + b,
        "-": a - b,
        "*": a * b,
        "/": a // b if b else None,
        "%": a % b if b else None,
    }[op]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 40), st.integers(0, 40), st.sampled_from(["+", "*", "/", "%"]))
def test_constant_folding_matches_python(a, b, op):
    # ``/`` is floor division in the language.
    expected = _py(op, a, b)
    expr = A.BinOp(op, A.Num(a), A.Num(b))
    if expected is None:
        with pytest.raises(Exception):
            fold(expr, {})
    else:
        assert fold(expr, {}) == expected
