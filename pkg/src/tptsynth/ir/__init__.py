"""Intermediate representation: unrolling, tabulation and the gated factor graph."""

from __future__ import annotations

from tptsynth.ir.difficulty import difficulty_metrics
from tptsynth.ir.dump import dump
from tptsynth.ir.graph import ROOT, Factor, Family, Gate, GatedFactorGraph, build_graph
from tptsynth.ir.tabulate import OUT_OF_RANGE, FactorTable, OutOfRange, tabulate_function
from tptsynth.ir.unroll import UnrolledProgram, unroll


def compile_source(source: str, hyperparams=None, input_snippet=None, output_snippet=None) -> GatedFactorGraph:
    """Run the whole front half of the pipeline on DSL text.

    The unrolled program (and through it the checked AST) stays reachable as
    ``graph.program``.
    """
    from tptsynth.frontend import check_semantics, parse_source, preprocess

    text = preprocess(source, hyperparams or {}, input_snippet, output_snippet)
    checked = check_semantics(parse_source(text))
    return build_graph(unroll(checked))


__all__ = [
    "ROOT",
    "OUT_OF_RANGE",
    "Factor",
    "FactorTable",
    "Family",
    "Gate",
    "GatedFactorGraph",
    "OutOfRange",
    "UnrolledProgram",
    "build_graph",
    "compile_source",
    "difficulty_metrics",
    "dump",
    "tabulate_function",
    "unroll",
]
