"""Benchmark corpus, example generation and parity-chain islands."""

from tptsynth.bench.islands import island_configs
from tptsynth.bench.tasks import (
    PARITY_SIZES,
    TaskSpec,
    builtin_tasks,
    corpus_root,
    gen_examples,
    load_task,
    make_task,
    parity_chain,
    task_names,
    write_corpus,
    write_task,
)

__all__ = [
    "PARITY_SIZES",
    "TaskSpec",
    "builtin_tasks",
    "corpus_root",
    "gen_examples",
    "island_configs",
    "load_task",
    "make_task",
    "parity_chain",
    "task_names",
    "write_corpus",
    "write_task",
]
