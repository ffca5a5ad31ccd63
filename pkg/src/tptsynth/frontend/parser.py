"""Recursive-descent parser producing the AST in ``frontend.ast``.

Expression precedence, loosest first::

    x if c else y
    or
    and
    == != < <= > >=        (non-associative)
    + -
    * / %
    not                    (prefix)
    call, index, atom
"""

from __future__ import annotations

from tptsynth.errors import ParseError
from tptsynth.frontend import ast as A
from tptsynth.frontend.lexer import Token, tokenize

_METHODS = {"set_to": A.SetTo, "set_to_constant": A.SetToConstant, "observe_value": A.ObserveValue}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.in_function = False

    # -- token helpers -------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, kind: str, text: str | None = None) -> bool:
        return self.tok.is_(kind, text)

    def at_op(self, *texts: str) -> bool:
        return self.tok.kind in ("operator", "punctuation", "keyword") and self.tok.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, expected) -> ParseError:
        t = self.tok
        if t.kind == "eof":
            got = "end of input"
        elif t.kind in ("newline", "indent", "dedent"):
            got = t.kind
        else:
            got = repr(t.text)
        exp = sorted(set(expected))
        return ParseError(f"unexpected {got}; expected one of: {', '.join(exp)}", t.line, t.column, exp)

    def expect(self, kind: str, text: str | None = None) -> Token:
        if self.tok.is_(kind, text):
            return self.advance()
        raise self.fail([text if text is not None else kind])

    def expect_ident(self) -> Token:
        return self.expect("identifier")

    def loc(self, t: Token | None = None):
        t = t or self.tok
        return (t.line, t.column)

    # -- program structure ---------------------------------------------------
    def program(self) -> A.Program:
        body = []
        while self.at("newline"):
            self.advance()
        while not self.at("eof"):
            body.extend(self.statement())
        return A.Program(tuple(body))

    def statement(self) -> list:
        t = self.tok
        if t.is_("keyword", "if"):
            return [self.if_stmt()]
        if t.is_("keyword", "for"):
            return [self.for_stmt()]
        if t.is_("keyword", "with"):
            return [self.with_stmt()]
        if t.is_("punctuation", "@"):
            return [self.funcdef()]
        if t.is_("keyword", "def"):
            raise ParseError("function definitions need an @CompileMe([...], out) decorator", t.line, t.column, ["@"])
        stmts = self.simple_stmts()
        return stmts

    def simple_stmts(self) -> list:
        stmts = [self.simple_stmt()]
        while self.at("punctuation", ";"):
            self.advance()
            if self.at("newline"):
                break
            stmts.append(self.simple_stmt())
        if self.at("eof"):
            return stmts
        self.expect("newline")
        return stmts

    def suite(self) -> tuple:
        if not self.at("newline"):
            return tuple(self.simple_stmts())
        self.advance()
        self.expect("indent")
        body = []
        while not self.at("dedent") and not self.at("eof"):
            body.extend(self.statement())
        self.expect("dedent")
        return tuple(body)

    def simple_stmt(self):
        t = self.tok
        if t.is_("keyword", "return"):
            self.advance()
            return A.Return(self.expr(), loc=self.loc(t))
        if t.kind != "identifier":
            raise self.fail(["identifier", "return", "if", "for", "with", "@"])
        if self.peek().is_("operator", "="):
            return self.binding()
        target = self.target()
        self.expect("punctuation", ".")
        m = self.tok
        if m.kind != "identifier" or m.text not in _METHODS:
            raise self.fail(list(_METHODS))
        self.advance()
        self.expect("punctuation", "(")
        value = self.expr()
        self.expect("punctuation", ")")
        return _METHODS[m.text](target, value, loc=self.loc(t))

    def binding(self):
        name_tok = self.advance()
        self.advance()  # '='
        if self.at("keyword", "Var") or self.at("keyword", "Param"):
            kind = self.advance().text
            self.expect("punctuation", "(")
            domain = self.expr()
            self.expect("punctuation", ")")
            dims: tuple = ()
            if self.at("punctuation", "["):
                self.advance()
                dims = tuple(self.expr_list("]"))
                self.expect("punctuation", "]")
                if not dims:
                    raise ParseError("empty dimension list", name_tok.line, name_tok.column, ["expression"])
            return A.VarDecl(name_tok.text, kind, domain, dims, loc=self.loc(name_tok))
        value = self.expr()
        if self.in_function:
            return A.Assign(name_tok.text, value, loc=self.loc(name_tok))
        return A.ConstDecl(name_tok.text, value, loc=self.loc(name_tok))

    def target(self):
        t = self.expect_ident()
        if self.at("punctuation", "["):
            self.advance()
            idx = tuple(self.expr_list("]"))
            self.expect("punctuation", "]")
            return A.Index(t.text, idx, loc=self.loc(t))
        return A.Name(t.text, loc=self.loc(t))

    def if_stmt(self) -> A.If:
        t = self.advance()  # 'if' or 'elif'
        test = self.expr()
        self.expect("punctuation", ":")
        body = self.suite()
        orelse: tuple = ()
        if self.at("keyword", "elif"):
            orelse = (self.if_stmt(),)
        elif self.at("keyword", "else"):
            self.advance()
            self.expect("punctuation", ":")
            orelse = self.suite()
        return A.If(test, body, orelse, loc=self.loc(t))

    def for_stmt(self) -> A.For:
        t = self.advance()
        var = self.expect_ident().text
        self.expect("keyword", "in")
        r = self.expect_ident()
        if r.text != "range":
            raise ParseError("for loops must iterate over range(...)", r.line, r.column, ["range"])
        self.expect("punctuation", "(")
        first = self.expr()
        if self.at("punctuation", ","):
            self.advance()
            start, stop = first, self.expr()
        else:
            start, stop = A.Num(0, loc=first.loc), first
        self.expect("punctuation", ")")
        self.expect("punctuation", ":")
        body = self.suite()
        return A.For(var, start, stop, body, loc=self.loc(t))

    def with_stmt(self) -> A.With:
        t = self.advance()
        e = self.expr()
        self.expect("keyword", "as")
        var = self.expect_ident().text
        self.expect("punctuation", ":")
        body = self.suite()
        return A.With(e, var, body, loc=self.loc(t))

    def funcdef(self) -> A.FuncDef:
        at = self.advance()
        deco = self.expect_ident()
        if deco.text != "CompileMe":
            raise ParseError(f"unknown decorator @{deco.text}; only @CompileMe is supported", deco.line, deco.column, ["CompileMe"])
        self.expect("punctuation", "(")
        self.expect("punctuation", "[")
        in_domains = tuple(self.expr_list("]"))
        self.expect("punctuation", "]")
        self.expect("punctuation", ",")
        out_domain = self.expr()
        self.expect("punctuation", ")")
        if self.at("punctuation", ";"):
            self.advance()
        while self.at("newline"):
            self.advance()
        self.expect("keyword", "def")
        name = self.expect_ident()
        self.expect("punctuation", "(")
        params = []
        if not self.at("punctuation", ")"):
            params.append(self.expect_ident().text)
            while self.at("punctuation", ","):
                self.advance()
                params.append(self.expect_ident().text)
        self.expect("punctuation", ")")
        self.expect("punctuation", ":")
        saved = self.in_function
        self.in_function = True
        try:
            body = self.suite()
        finally:
            self.in_function = saved
        return A.FuncDef(name.text, in_domains, out_domain, tuple(params), body, loc=self.loc(at))

    # -- expressions ---------------------------------------------------------
    def expr_list(self, closer: str) -> list:
        items = []
        if self.at("punctuation", closer):
            return items
        items.append(self.expr())
        while self.at("punctuation", ","):
            self.advance()
            if self.at("punctuation", closer):
                break
            items.append(self.expr())
        return items

    def expr(self):
        body = self.or_expr()
        if self.at("keyword", "if"):
            t = self.advance()
            test = self.or_expr()
            self.expect("keyword", "else")
            orelse = self.expr()
            return A.IfExp(body, test, orelse, loc=body.loc)
        return body

    def or_expr(self):
        left = self.and_expr()
        while self.at("keyword", "or"):
            self.advance()
            left = A.BinOp("or", left, self.and_expr(), loc=left.loc)
        return left

    def and_expr(self):
        left = self.comparison()
        while self.at("keyword", "and"):
            self.advance()
            left = A.BinOp("and", left, self.comparison(), loc=left.loc)
        return left

    def comparison(self):
        left = self.additive()
        if self.tok.kind == "operator" and self.tok.text in A.COMPARE_OPS:
            op = self.advance().text
            right = self.additive()
            if self.tok.kind == "operator" and self.tok.text in A.COMPARE_OPS:
                raise ParseError("chained comparisons are not supported", self.tok.line, self.tok.column, ["and", "or"])
            return A.BinOp(op, left, right, loc=left.loc)
        return left

    def additive(self):
        left = self.multiplicative()
        while self.tok.kind == "operator" and self.tok.text in ("+", "-"):
            op = self.advance().text
            left = A.BinOp(op, left, self.multiplicative(), loc=left.loc)
        return left

    def multiplicative(self):
        left = self.unary()
        while self.tok.kind == "operator" and self.tok.text in ("*", "/", "%"):
            op = self.advance().text
            left = A.BinOp(op, left, self.unary(), loc=left.loc)
        return left

    def unary(self):
        if self.at("keyword", "not"):
            t = self.advance()
            return A.UnaryOp("not", self.unary(), loc=self.loc(t))
        return self.postfix()

    def postfix(self):
        t = self.tok
        if t.kind == "integer-literal":
            self.advance()
            return A.Num(int(t.text), loc=self.loc(t))
        if t.is_("punctuation", "("):
            self.advance()
            e = self.expr()
            self.expect("punctuation", ")")
            return e
        if t.kind == "identifier":
            self.advance()
            if self.at("punctuation", "("):
                self.advance()
                args = tuple(self.expr_list(")"))
                self.expect("punctuation", ")")
                return A.Call(t.text, args, loc=self.loc(t))
            if self.at("punctuation", "["):
                self.advance()
                idx = tuple(self.expr_list("]"))
                self.expect("punctuation", "]")
                if not idx:
                    raise ParseError("empty index list", t.line, t.column, ["expression"])
                return A.Index(t.text, idx, loc=self.loc(t))
            return A.Name(t.text, loc=self.loc(t))
        raise self.fail(["integer", "identifier", "(", "not"])


def parse(tokens: list[Token]) -> A.Program:
    """Parse a token stream from :func:`tokenize` into a :class:`Program`."""
    return _Parser(tokens).program()


def parse_source(source: str) -> A.Program:
    return parse(tokenize(source))
