"""Gated LP relaxation: construction, CPLEX LP text and solver plumbing."""

from tptsynth.lp.build import LpModel, Row, build_lp, integral_point, sanitize
from tptsynth.lp.emit import emit_lp, parse_lp
from tptsynth.lp.solve import INTEGRALITY_TOL, LpSolution, extract_assignment, parse_solution, solve_lp

__all__ = [
    "INTEGRALITY_TOL",
    "LpModel",
    "LpSolution",
    "Row",
    "build_lp",
    "emit_lp",
    "extract_assignment",
    "integral_point",
    "parse_lp",
    "parse_solution",
    "sanitize",
    "solve_lp",
]
