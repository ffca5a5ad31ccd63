"""Compiler and synthesis back-ends for a small probabilistic programming DSL.

The usual pipeline is::

    source = preprocess(text, hypers, inputs, outputs)
    checked = check_semantics(parse(tokenize(source)))
    graph = build_graph(unroll(checked))

after which any of the back-ends (``fmgd``, ``lp``, ``smt``, ``interp``) can be
pointed at the graph or at the unrolled program.
"""

from tptsynth.errors import TptError
from tptsynth.frontend import check_semantics, parse, parse_source, preprocess, tokenize
from tptsynth.ir import build_graph, compile_source, difficulty_metrics, unroll

__all__ = [
    "TptError",
    "tokenize",
    "preprocess",
    "parse",
    "parse_source",
    "check_semantics",
    "unroll",
    "build_graph",
    "compile_source",
    "difficulty_metrics",
]

__version__ = "0.1.0"
