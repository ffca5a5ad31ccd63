"""Static checks: scoping, constant folding, function signatures, gate form, SSA.

``check_semantics`` returns a resolved :class:`~tptsynth.frontend.ast.Ast` or
raises :class:`~tptsynth.errors.SemanticError` carrying every diagnostic.
``diagnose`` returns the diagnostic list without raising.

SSA and index bounds are properties of the unrolled program, so after the
structural checks pass the checker unrolls once and inspects the concrete
writes. Two writes to the same cell are allowed only when they sit in
different branches of the same conditional.
"""

from __future__ import annotations

from dataclasses import dataclass

from tptsynth.errors import SemanticError, UnrollError
from tptsynth.frontend import ast as A
from tptsynth.frontend.consts import ConstEvalError, NotConstant, fold


@dataclass(frozen=True)
class SemanticDiagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity} [{self.code}] {self.message}"


class _Checker:
    def __init__(self, program: A.Program):
        self.program = program
        self.diags: list[SemanticDiagnostic] = []
        self.consts: dict[str, int] = {}
        self.functions: dict[str, A.FunctionInfo] = {}
        self.params: dict[str, A.DeclInfo] = {}
        self.vars: dict[str, A.DeclInfo] = {}
        self.statements: list = []
        self.declared: set[str] = set()

    def err(self, code, msg, loc, severity="error"):
        self.diags.append(SemanticDiagnostic(severity, code, msg, loc[0], loc[1]))

    # -- helpers -------------------------------------------------------------
    def decl(self, name):
        return self.params.get(name) or self.vars.get(name)

    def fold_positive(self, e, what, loc) -> int | None:
        try:
            v = fold(e, self.consts)
        except NotConstant as exc:
            self.err("not-constant", f"{what} must be a compile-time constant (found {exc})", loc)
            return None
        except ConstEvalError as exc:
            self.err("const-eval", f"{what}: {exc}", exc.loc if exc.loc != (0, 0) else loc)
            return None
        if v <= 0:
            self.err("bad-size", f"{what} must be a positive integer, got {v}", loc)
            return None
        return v

    def new_name(self, name, loc) -> bool:
        if name in self.declared:
            self.err("redeclared", f"'{name}' is already declared", loc)
            return False
        self.declared.add(name)
        return True

    # -- top level -----------------------------------------------------------
    def run(self):
        order = 0
        for s in self.program.body:
            if isinstance(s, A.ConstDecl):
                if not self.new_name(s.name, s.loc):
                    continue
                try:
                    self.consts[s.name] = fold(s.value, self.consts)
                except NotConstant as exc:
                    self.err("not-constant", f"constant '{s.name}' refers to non-constant '{exc}'", s.loc)
                except ConstEvalError as exc:
                    self.err("const-eval", f"constant '{s.name}': {exc}", s.loc)
            elif isinstance(s, A.VarDecl):
                if not self.new_name(s.name, s.loc):
                    continue
                dom = self.fold_positive(s.domain, f"domain of '{s.name}'", s.loc)
                dims = [self.fold_positive(d, f"dimension of '{s.name}'", s.loc) for d in s.dims]
                if dom is None or any(d is None for d in dims):
                    continue
                info = A.DeclInfo(s.name, s.kind, dom, tuple(dims), s.loc, order)
                order += 1
                (self.params if s.kind == "Param" else self.vars)[s.name] = info
            elif isinstance(s, A.FuncDef):
                self.funcdef(s)
            elif isinstance(s, A.Assign):
                self.err("bad-statement", "local assignment outside a function", s.loc)
            elif isinstance(s, A.Return):
                self.err("return-outside-function", "return outside a @CompileMe function", s.loc)
            else:
                self.model_stmt(s, {}, in_loop=False)
                self.statements.append(s)

    # -- functions -----------------------------------------------------------
    def funcdef(self, f: A.FuncDef):
        if not self.new_name(f.name, f.loc):
            return
        ins = [self.fold_positive(d, f"input domain of '{f.name}'", f.loc) for d in f.in_domains]
        out = self.fold_positive(f.out_domain, f"output domain of '{f.name}'", f.loc)
        if len(ins) != len(f.params):
            self.err(
                "arity",
                f"@CompileMe for '{f.name}' lists {len(ins)} input domains but the function takes {len(f.params)} arguments",
                f.loc,
            )
        if len(set(f.params)) != len(f.params):
            self.err("redeclared", f"duplicate parameter name in '{f.name}'", f.loc)
        for p in f.params:
            if p in self.declared:
                self.err("shadowing", f"parameter '{p}' of '{f.name}' shadows a global name", f.loc)
        self.func_block(f.body, set(f.params), f.name, top=True)
        if None in ins or out is None or len(ins) != len(f.params):
            return
        self.functions[f.name] = A.FunctionInfo(f.name, f.params, tuple(ins), out, f.body, f.loc)

    def func_block(self, body, scope: set, fname: str, top: bool):
        scope = set(scope)
        for i, s in enumerate(body):
            last = i == len(body) - 1
            if isinstance(s, A.Assign):
                self.func_expr(s.value, scope, fname)
                if s.name in self.declared:
                    self.err("shadowing", f"local '{s.name}' in '{fname}' shadows a global name", s.loc)
                scope.add(s.name)
            elif isinstance(s, A.Return):
                self.func_expr(s.value, scope, fname)
                if not last:
                    self.err("return-not-last", "return must be the last statement of its block", s.loc)
            elif isinstance(s, A.If):
                self.func_expr(s.test, scope, fname)
                self.func_block(s.body, scope, fname, top=False)
                if s.orelse:
                    self.func_block(s.orelse, scope, fname, top=False)
            else:
                self.err("bad-function-statement", f"{type(s).__name__} is not allowed in a @CompileMe body", s.loc)
        if top and not _always_returns(body):
            # Fall-through is only an error if it is reachable; tabulation decides.
            pass

    def func_expr(self, e, scope: set, fname: str):
        for sub in A.walk_expr(e):
            if isinstance(sub, A.Name):
                if sub.id not in scope and sub.id not in self.consts:
                    self.err("undeclared", f"'{sub.id}' is not defined in function '{fname}'", sub.loc)
            elif isinstance(sub, A.Index):
                self.err("bad-function-expression", "array access is not allowed in a @CompileMe body", sub.loc)
            elif isinstance(sub, A.Call):
                self.check_call(sub)

    def check_call(self, c: A.Call):
        fn = self.functions.get(c.func)
        if fn is None:
            self.err("undeclared-function", f"call to undeclared function '{c.func}'", c.loc)
            return
        if len(c.args) != len(fn.params):
            self.err("arity", f"'{c.func}' takes {len(fn.params)} arguments, {len(c.args)} given", c.loc)

    # -- model statements ------------------------------------------------------
    def compile_time(self, e, ct: dict, what: str, loc) -> bool:
        """Check that ``e`` mentions only constants and compile-time names."""
        ok = True
        for sub in A.walk_expr(e):
            if isinstance(sub, A.Name) and sub.id not in self.consts and sub.id not in ct:
                if self.decl(sub.id) is not None:
                    self.err("not-constant", f"{what} must be a compile-time constant; '{sub.id}' is a variable", sub.loc)
                else:
                    self.err("undeclared", f"'{sub.id}' is not declared", sub.loc)
                ok = False
            elif isinstance(sub, (A.Index, A.Call)):
                self.err("not-constant", f"{what} must be a compile-time constant", sub.loc)
                ok = False
        return ok

    def var_ref(self, e, ct: dict, what: str) -> A.DeclInfo | None:
        """Check a reference to a declared variable cell; return its declaration."""
        if isinstance(e, A.Name):
            d = self.decl(e.id)
            if d is None:
                if e.id in ct or e.id in self.consts:
                    self.err("not-a-variable", f"{what}: '{e.id}' is not a Var or Param", e.loc)
                else:
                    self.err("undeclared", f"'{e.id}' is not declared", e.loc)
                return None
            if d.dims:
                self.err("index-arity", f"'{e.id}' has {len(d.dims)} dimensions but is used without indices", e.loc)
                return None
            return d
        if isinstance(e, A.Index):
            d = self.decl(e.name)
            if d is None:
                self.err("undeclared", f"'{e.name}' is not declared", e.loc)
                return None
            if len(e.indices) != len(d.dims):
                self.err("index-arity", f"'{e.name}' has {len(d.dims)} dimensions, {len(e.indices)} indices given", e.loc)
                return None
            for i in e.indices:
                self.compile_time(i, ct, f"index of '{e.name}'", e.loc)
            return d
        self.err("not-a-variable", f"{what} must be a variable reference", getattr(e, "loc", (0, 0)))
        return None

    def runtime_expr(self, e, ct: dict):
        if isinstance(e, A.Num):
            return
        if isinstance(e, A.Name):
            if e.id in ct or e.id in self.consts:
                return
            self.var_ref(e, ct, "expression")
            return
        if isinstance(e, A.Index):
            self.var_ref(e, ct, "expression")
            return
        if isinstance(e, A.Call):
            self.check_call(e)
            for a in e.args:
                self.runtime_expr(a, ct)
            return
        if isinstance(e, A.BinOp):
            self.runtime_expr(e.left, ct)
            self.runtime_expr(e.right, ct)
            if e.op in ("/", "%"):
                try:
                    if fold(e.right, {**self.consts, **ct}, allow_negative=True) == 0:
                        self.err("division-by-zero", "division by constant zero", e.loc)
                except NotConstant:
                    self.err(
                        "divisor-domain",
                        "divisor depends on a variable whose domain includes 0; division by a runtime value is rejected",
                        e.loc,
                    )
                except ConstEvalError:
                    pass
            return
        if isinstance(e, A.UnaryOp):
            self.runtime_expr(e.operand, ct)
            return
        if isinstance(e, A.IfExp):
            self.runtime_expr(e.test, ct)
            self.runtime_expr(e.body, ct)
            self.runtime_expr(e.orelse, ct)
            return
        self.err("bad-expression", f"unexpected {type(e).__name__}", getattr(e, "loc", (0, 0)))

    def model_block(self, body, ct, in_loop):
        for s in body:
            self.model_stmt(s, ct, in_loop)

    def model_stmt(self, s, ct: dict, in_loop: bool):
        if isinstance(s, (A.ConstDecl, A.VarDecl, A.FuncDef)):
            self.err("nested-declaration", "declarations are only allowed at the top level", s.loc)
        elif isinstance(s, A.Assign):
            self.err("bad-statement", "plain assignment to a variable; use .set_to(...)", s.loc)
        elif isinstance(s, A.Return):
            self.err("return-outside-function", "return outside a @CompileMe function", s.loc)
        elif isinstance(s, A.SetTo):
            d = self.var_ref(s.target, ct, "set_to target")
            if d is not None and d.kind == "Param":
                self.err("assign-param", f"Param '{d.name}' cannot be the target of set_to; use set_to_constant to pin it", s.loc)
            self.runtime_expr(s.value, ct)
        elif isinstance(s, (A.SetToConstant, A.ObserveValue)):
            what = "set_to_constant" if isinstance(s, A.SetToConstant) else "observe_value"
            d = self.var_ref(s.target, ct, f"{what} target")
            if d is not None and isinstance(s, A.ObserveValue) and d.kind == "Param":
                self.err("observe-param", f"observing Param '{d.name}' directly is not supported", s.loc)
            if self.compile_time(s.value, ct, f"{what} value", s.loc) and not ct and d is not None:
                try:
                    v = fold(s.value, self.consts)
                    if not 0 <= v < d.domain:
                        self.err("domain", f"value {v} is outside the domain {{0..{d.domain - 1}}} of '{d.name}'", s.loc)
                except (NotConstant, ConstEvalError) as exc:
                    self.err("const-eval", str(exc), s.loc)
        elif isinstance(s, A.If):
            self.gate_condition(s.test, ct)
            self.model_block(s.body, ct, in_loop)
            self.model_block(s.orelse, ct, in_loop)
        elif isinstance(s, A.For):
            self.compile_time(s.start, ct, "range bound", s.loc)
            self.compile_time(s.stop, ct, "range bound", s.loc)
            if s.var in self.declared or s.var in ct:
                self.err("shadowing", f"loop variable '{s.var}' shadows an existing name", s.loc)
            self.model_block(s.body, {**ct, s.var: 0}, True)
        elif isinstance(s, A.With):
            self.var_ref(s.expr, ct, "with expression")
            if s.var in self.declared or s.var in ct:
                self.err("shadowing", f"with-variable '{s.var}' shadows an existing name", s.loc)
            self.model_block(s.body, {**ct, s.var: 0}, in_loop)
        else:
            self.err("bad-statement", f"unexpected {type(s).__name__}", getattr(s, "loc", (0, 0)))

    def gate_condition(self, test, ct):
        env_names = set(self.consts) | set(ct)
        if isinstance(test, A.BinOp) and test.op == "==":
            sides = (test.left, test.right)
            var_sides = [x for x in sides if _mentions_variable(x, env_names)]
            if not var_sides:
                self.compile_time(test, ct, "condition", test.loc)
                return
            if len(var_sides) == 1 and isinstance(var_sides[0], (A.Name, A.Index)):
                other = sides[1] if var_sides[0] is sides[0] else sides[0]
                self.var_ref(var_sides[0], ct, "gate condition")
                self.compile_time(other, ct, "gate condition value", test.loc)
                return
        elif not _mentions_variable(test, env_names):
            self.compile_time(test, ct, "condition", getattr(test, "loc", (0, 0)))
            return
        self.err("gate-condition", "gate conditions must have the form `variable == constant`", getattr(test, "loc", (0, 0)))


def _mentions_variable(e, compile_time_names: set) -> bool:
    for sub in A.walk_expr(e):
        if isinstance(sub, A.Index) or isinstance(sub, A.Call):
            return True
        if isinstance(sub, A.Name) and sub.id not in compile_time_names:
            return True
    return False


def _always_returns(body) -> bool:
    if not body:
        return False
    last = body[-1]
    if isinstance(last, A.Return):
        return True
    if isinstance(last, A.If):
        return bool(last.orelse) and _always_returns(last.body) and _always_returns(last.orelse)
    return False


def _ssa_check(unrolled_stmts, diags: list):
    """Flag writes to the same cell that are not in mutually exclusive branches."""
    writes: dict = {}
    counter = [0]

    def visit(stmts, path):
        for s in stmts:
            if isinstance(s, (A.SetTo, A.SetToConstant)):
                writes.setdefault(s.target.key(), []).append((path, s))
            elif isinstance(s, A.If):
                counter[0] += 1
                cid = counter[0]
                visit(s.body, path + ((cid, 0),))
                visit(s.orelse, path + ((cid, 1),))

    visit(unrolled_stmts, ())

    def exclusive(p, q):
        for a, b in zip(p, q):
            if a != b:
                return a[0] == b[0]
        return False

    reported = set()
    for key, ws in writes.items():
        if len(ws) < 2:
            continue
        for i in range(len(ws)):
            for j in range(i + 1, len(ws)):
                (p, s1), (q, s2) = ws[i], ws[j]
                if exclusive(p, q):
                    continue
                sites = (s1.loc, s2.loc)
                if (key, sites) in reported:
                    continue
                reported.add((key, sites))
                label = A.Cell(*key).label()
                diags.append(
                    SemanticDiagnostic(
                        "error",
                        "ssa",
                        f"'{label}' is assigned twice on one execution path: at line {s1.loc[0]}:{s1.loc[1]} and at line {s2.loc[0]}:{s2.loc[1]}",
                        s2.loc[0],
                        s2.loc[1],
                    )
                )


def _domain_check(unrolled_stmts, ast: A.Ast, diags: list):
    def visit(stmts):
        for s in stmts:
            if isinstance(s, (A.SetToConstant, A.ObserveValue)):
                d = ast.decl(s.target.name)
                v = s.value.value if isinstance(s.value, A.Num) else None
                if v is not None and not 0 <= v < d.domain:
                    what = "set_to_constant" if isinstance(s, A.SetToConstant) else "observe_value"
                    diags.append(
                        SemanticDiagnostic(
                            "error",
                            "domain",
                            f"{what} value {v} is outside the domain {{0..{d.domain - 1}}} of '{s.target.label()}'",
                            s.loc[0],
                            s.loc[1],
                        )
                    )
            elif isinstance(s, A.If):
                visit(s.body)
                visit(s.orelse)

    visit(unrolled_stmts)


def diagnose(program: A.Program, *, unroll_check: bool = True):
    """Return ``(ast_or_None, diagnostics)``; diagnostics are sorted by location."""
    c = _Checker(program)
    c.run()
    ast = A.Ast(
        program=program,
        const_decls=dict(c.consts),
        functions=dict(c.functions),
        param_decls=dict(c.params),
        var_decls=dict(c.vars),
        statements=tuple(c.statements),
    )
    diags = list(c.diags)
    if unroll_check and not any(d.severity == "error" for d in diags):
        from tptsynth.ir.unroll import unroll  # local import: ir depends on frontend

        try:
            unrolled = unroll(ast)
        except UnrollError as exc:
            diags.append(SemanticDiagnostic("error", "unroll", exc.message, exc.line or 0, exc.column or 0))
        else:
            before = len(diags)
            _domain_check(unrolled.statements, ast, diags)
            _ssa_check(unrolled.statements, diags)
            if len(diags) == before:
                ast._unrolled = unrolled
    diags = _dedupe(sorted(diags, key=lambda d: (d.line, d.column, d.code, d.message)))
    ast.warnings = [d for d in diags if d.severity == "warning"]
    if any(d.severity == "error" for d in diags):
        return None, diags
    return ast, diags


def _dedupe(diags):
    seen = set()
    out = []
    for d in diags:
        if d in seen:
            continue
        seen.add(d)
        out.append(d)
    return out


def check_semantics(program: A.Program, *, unroll_check: bool = True) -> A.Ast:
    """Validate ``program``; raise :class:`SemanticError` listing every problem."""
    ast, diags = diagnose(program, unroll_check=unroll_check)
    if ast is None:
        raise SemanticError(diags)
    return ast
