"""SMT-LIB 2 back-end."""

from tptsynth.smt.solve import SmtResult, parse_model, solve_smt
from tptsynth.smt.translate import (
    ExprTranslator,
    SmtScript,
    TranslationError,
    emit_smtlib,
    smt_name,
    translate_expr,
    translate_stmt,
)

__all__ = [
    "ExprTranslator",
    "SmtResult",
    "SmtScript",
    "TranslationError",
    "emit_smtlib",
    "parse_model",
    "smt_name",
    "solve_smt",
    "translate_expr",
    "translate_stmt",
]
