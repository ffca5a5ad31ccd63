"""AST node classes.

Nodes are frozen dataclasses; source locations are carried in ``loc`` but are
excluded from equality so that structurally identical trees compare equal
regardless of where they came from (the printer round-trip relies on this).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

Loc = Tuple[int, int]
_NOLOC: Loc = (0, 0)


def _loc():
    return field(default=_NOLOC, compare=False, repr=False)


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Num:
    value: int
    loc: Loc = _loc()


@dataclass(frozen=True)
class Name:
    id: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class Index:
    """``name[i, j, ...]`` with arbitrary index expressions."""

    name: str
    indices: Tuple["Expr", ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class Cell:
    """A scalar variable cell with constant indices; only appears after unrolling."""

    name: str
    indices: Tuple[int, ...]
    loc: Loc = _loc()

    def key(self) -> tuple:
        return (self.name, self.indices)

    def label(self) -> str:
        if not self.indices:
            return self.name
        return f"{self.name}[{','.join(map(str, self.indices))}]"


@dataclass(frozen=True)
class Call:
    func: str
    args: Tuple["Expr", ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / % == != < <= > >= and or
    left: "Expr"
    right: "Expr"
    loc: Loc = _loc()


@dataclass(frozen=True)
class UnaryOp:
    op: str  # only "not"
    operand: "Expr"
    loc: Loc = _loc()


@dataclass(frozen=True)
class IfExp:
    body: "Expr"
    test: "Expr"
    orelse: "Expr"
    loc: Loc = _loc()


Expr = Union[Num, Name, Index, Cell, Call, BinOp, UnaryOp, IfExp]

ARITH_OPS = ("+", "-", "*", "/", "%")
COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("and", "or")

# ----------------------------------------------------------------- statements


@dataclass(frozen=True)
class ConstDecl:
    name: str
    value: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class VarDecl:
    """``name = Var(domain)[dims]`` or ``name = Param(domain)[dims]``."""

    name: str
    kind: str  # "Var" | "Param"
    domain: Expr
    dims: Tuple[Expr, ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class FuncDef:
    name: str
    in_domains: Tuple[Expr, ...]
    out_domain: Expr
    params: Tuple[str, ...]
    body: Tuple["Stmt", ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class Assign:
    """Local binding inside a function body (``s = a + b``)."""

    name: str
    value: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class SetTo:
    target: Expr
    value: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class SetToConstant:
    target: Expr
    value: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class ObserveValue:
    target: Expr
    value: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class If:
    """``if test: body else: orelse``; an ``elif`` is an If nested alone in orelse."""

    test: Expr
    body: Tuple["Stmt", ...]
    orelse: Tuple["Stmt", ...] = ()
    loc: Loc = _loc()


@dataclass(frozen=True)
class For:
    var: str
    start: Expr
    stop: Expr
    body: Tuple["Stmt", ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class With:
    expr: Expr
    var: str
    body: Tuple["Stmt", ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class Return:
    value: Expr
    loc: Loc = _loc()


Stmt = Union[ConstDecl, VarDecl, FuncDef, Assign, SetTo, SetToConstant, ObserveValue, If, For, With, Return]


@dataclass(frozen=True)
class Program:
    """Top-level statement list in source order."""

    body: Tuple[Stmt, ...]


@dataclass
class FunctionInfo:
    name: str
    params: Tuple[str, ...]
    in_domains: Tuple[int, ...]
    out_domain: int
    body: Tuple[Stmt, ...]
    loc: Loc


@dataclass
class DeclInfo:
    name: str
    kind: str  # "Var" | "Param"
    domain: int
    dims: Tuple[int, ...]
    loc: Loc
    order: int


@dataclass
class Ast:
    """A checked program: the statement tree plus resolved declaration tables.

    ``const_decls`` maps constant names to their folded values,
    ``functions``/``param_decls``/``var_decls`` are keyed by name in source
    order, and ``statements`` holds the model statements (declarations and
    function definitions removed).
    """

    program: Program
    const_decls: dict
    functions: dict
    param_decls: dict
    var_decls: dict
    statements: Tuple[Stmt, ...]
    warnings: list = field(default_factory=list)

    def decl(self, name: str) -> Optional[DeclInfo]:
        return self.param_decls.get(name) or self.var_decls.get(name)

    @property
    def all_decls(self) -> list:
        return sorted(list(self.param_decls.values()) + list(self.var_decls.values()), key=lambda d: d.order)


def walk_expr(e: Expr):
    """Yield ``e`` and all sub-expressions, pre-order."""
    yield e
    if isinstance(e, Index):
        for i in e.indices:
            yield from walk_expr(i)
    elif isinstance(e, Call):
        for a in e.args:
            yield from walk_expr(a)
    elif isinstance(e, BinOp):
        yield from walk_expr(e.left)
        yield from walk_expr(e.right)
    elif isinstance(e, UnaryOp):
        yield from walk_expr(e.operand)
    elif isinstance(e, IfExp):
        yield from walk_expr(e.test)
        yield from walk_expr(e.body)
        yield from walk_expr(e.orelse)
