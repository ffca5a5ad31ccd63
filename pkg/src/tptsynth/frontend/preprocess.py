"""Textual preprocessing: hyperparameter substitution and I/O snippet import."""

from __future__ import annotations

import re
from typing import Mapping

from tptsynth.errors import PreprocessError

_HYPER_RE = re.compile(r"#__HYPERPARAM_([A-Za-z_][A-Za-z0-9_]*?)__\s*$")
_IMPORT_RE = re.compile(r"^(?P<indent>[ ]*)#__IMPORT_OBSERVED_(?P<which>INPUTS|OUTPUTS)__\s*$")


def _indent_snippet(snippet: str, indent: str) -> list[str]:
    lines = snippet.replace("\r\n", "\n").split("\n")
    # Drop the trailing empty line produced by a final newline.
    while lines and not lines[-1].strip():
        lines.pop()
    # Snippets are usually flush-left, but strip any common margin first.
    margins = [len(l) - len(l.lstrip(" ")) for l in lines if l.strip()]
    common = min(margins) if margins else 0
    return [(indent + l[common:]) if l.strip() else "" for l in lines]


def preprocess(
    source: str,
    hyperparams: Mapping[str, int] | None = None,
    input_snippet: str | None = None,
    output_snippet: str | None = None,
) -> str:
    """Expand ``#__HYPERPARAM_v__`` and ``#__IMPORT_OBSERVED_*__`` directives.

    A hyperparameter directive must form the whole comment at the end of its
    line (it is normally the right-hand side of ``v = ...``). An import
    directive must be the only thing on its line; the snippet is re-indented
    to the directive's column. Everything else passes through untouched.
    """
    hyperparams = dict(hyperparams or {})
    snippets = {"INPUTS": input_snippet, "OUTPUTS": output_snippet}
    out: list[str] = []
    for lineno, line in enumerate(source.split("\n"), start=1):
        m = _IMPORT_RE.match(line)
        if m:
            which = m.group("which")
            snippet = snippets[which]
            if snippet is None:
                raise PreprocessError(
                    f"#__IMPORT_OBSERVED_{which}__ present but no {which.lower()[:-1]} snippet was supplied",
                    lineno,
                    len(m.group("indent")) + 1,
                )
            out.extend(_indent_snippet(snippet, m.group("indent")))
            continue
        h = _HYPER_RE.search(line)
        if h:
            name = h.group(1)
            if name not in hyperparams:
                raise PreprocessError(f"unbound hyperparameter in directive #__HYPERPARAM_{name}__", lineno, h.start() + 1)
            value = hyperparams[name]
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise PreprocessError(f"hyperparameter {name} must be a non-negative integer, got {value!r}", lineno)
            line = line[: h.start()] + str(value)
        out.append(line)
    return "\n".join(out)
