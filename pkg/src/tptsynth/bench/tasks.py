"""Benchmark task definitions and example generation.

A task is a model file, the hyperparameters that instantiate it and one
input/output snippet pair per instance. Snippets are ordinary DSL
statements (``set_to_constant`` for inputs, ``observe_value`` for outputs)
addressed at instance ``i`` of the model's outermost loop; the task's input
and output snippets are these pairs concatenated in instance order.

Examples are drawn from each task's stated precondition with a pinned seed
and labelled by the plain-Python specifications in
:mod:`tptsynth.bench.reference`.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from tptsynth.bench import reference as ref

CORPUS_PACKAGE = "tptsynth.corpus"


def corpus_root() -> Path:
    return Path(str(resources.files(CORPUS_PACKAGE)))


@dataclass
class TaskSpec:
    name: str
    family: str  # turing | circuits | basic_block | assembly | parity | toy
    model: str  # path below corpus/models
    hypers: dict
    inputs: tuple = ()  # per-instance input snippets
    outputs: tuple = ()  # per-instance output snippets
    sizes: dict = field(default_factory=dict)  # arguments of difficulty_metrics
    n_instances: int = 0
    description: str = ""
    seed: Optional[int] = None
    gated: bool = True  # False for tasks shipped only as a challenge

    def source(self) -> str:
        return (corpus_root() / "models" / self.model).read_text()

    @property
    def input_snippet(self) -> Optional[str]:
        return "\n".join(self.inputs) if self.inputs else None

    @property
    def output_snippet(self) -> Optional[str]:
        return "\n".join(self.outputs) if self.outputs else None

    def preprocessed(self) -> str:
        from tptsynth.frontend import preprocess

        src = self.source()
        inp = self.input_snippet if "#__IMPORT_OBSERVED_INPUTS__" in src else None
        out = self.output_snippet if "#__IMPORT_OBSERVED_OUTPUTS__" in src else None
        return preprocess(src, self.hypers, inp, out)

    def checked(self):
        """The checked Ast (not unrolled)."""
        from tptsynth.frontend import check_semantics, parse_source

        return check_semantics(parse_source(self.preprocessed()))

    def compile(self):
        """The gated factor graph of the task; ``graph.program`` holds the unrolled program."""
        from tptsynth.ir import build_graph, unroll

        return build_graph(unroll(self.checked()))

    def difficulty(self) -> Optional[dict]:
        if self.family not in ("turing", "circuits", "basic_block", "assembly"):
            return None
        from tptsynth.ir import difficulty_metrics

        sizes = dict(self.sizes)
        t = sizes.pop("T", None)
        return difficulty_metrics(self.family, T=t, **sizes)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "family": self.family,
            "model": self.model,
            "sizes": self.sizes,
            "n_instances": self.n_instances,
            "description": self.description,
            "seed": self.seed,
            "gated": self.gated,
        }


# -- snippet formatting -------------------------------------------------------------


def _cells(stmt: str, name: str, prefix: tuple, values) -> list:
    head = ",".join(map(str, prefix))
    return [f"{name}[{head},{m}].{stmt}({v})" for m, v in values]


def _turing_pair(i: int, tape_in, tape_out, n_steps: int):
    inp = _cells("set_to_constant", "tape", (i, 0), enumerate(tape_in))
    out = _cells("observe_value", "tape", (i, n_steps - 1), enumerate(tape_out))
    return "\n".join(inp), "\n".join(out)


def _circuit_pair(i: int, wires_in, outputs, n_gates: int):
    inp = _cells("set_to_constant", "wires", (i, 0), enumerate(wires_in))
    out = _cells("observe_value", "wires", (i, n_gates), enumerate(outputs))
    return "\n".join(inp), "\n".join(out)


def _heap_pair(i: int, heap_in, observed, n_steps: int):
    inp = _cells("set_to_constant", "heap", (i, 0), enumerate(heap_in))
    out = _cells("observe_value", "heap", (i, n_steps - 1), observed)
    return "\n".join(inp), "\n".join(out)


# -- input samplers ----------------------------------------------------------------


def _distinct(rng: np.random.Generator, draw: Callable, n: int, limit: int = 10000) -> list:
    seen, out = set(), []
    for _ in range(limit):
        x = draw(rng)
        key = json.dumps(x)
        if key not in seen:
            seen.add(key)
            out.append(x)
            if len(out) == n:
                return out
    raise ValueError(f"could not draw {n} distinct examples")


def _bits(rng, k) -> list:
    return [int(b) for b in rng.integers(0, 2, size=k)]


def _turing_examples(fn, max_len: int, min_value: int = 0):
    def gen(rng, n, hypers):
        length = hypers["const_tapeLength"]
        steps = hypers["const_nTimesteps"]

        def draw(r):
            while True:
                k = int(r.integers(1, max_len + 1))
                bits = _bits(r, k)
                if int("".join(map(str, bits)), 2) >= min_value:
                    return bits

        pairs = []
        for i, bits in enumerate(_distinct(rng, draw, n)):
            tape = ref.pad(bits, length)
            pairs.append(_turing_pair(i, tape, fn(tape), steps))
        return pairs

    return gen


def _circuit_examples(fn, n_in: int):
    def gen(rng, n, hypers):
        wires = hypers["const_nWires"]
        gates = hypers["const_nGates"]
        combos = list(itertools.product((0, 1), repeat=n_in))
        if n > len(combos):
            raise ValueError(f"only {len(combos)} distinct inputs exist")
        if n < len(combos):
            pick = sorted(rng.choice(len(combos), size=n, replace=False))
            combos = [combos[j] for j in pick]
        pairs = []
        for i, c in enumerate(combos):
            state = list(c) + [0] * (wires - n_in)
            pairs.append(_circuit_pair(i, state, fn(*c), gates))
        return pairs

    return gen


def _access_examples(rng, n, hypers):
    m = hypers["const_maxInt"]
    steps = hypers["const_nTimesteps"]

    def draw(r):
        j = int(r.integers(1, m - 1))  # J + 1 < M
        arr = [int(v) for v in r.integers(1, m, size=j)]
        k = int(r.integers(0, j))
        heap = [k] + arr + [0] * (m - 1 - j)
        return heap

    pairs = []
    for i, heap in enumerate(_distinct(rng, draw, n)):
        pairs.append(_heap_pair(i, heap, [(0, ref.access(heap))], steps))
    return pairs


def _decrement_examples(rng, n, hypers):
    m = hypers["const_maxInt"]
    steps = hypers["const_nTimesteps"]

    def draw(r):
        k = int(r.integers(1, m))  # K < M
        arr = [int(v) for v in r.integers(2, m, size=k)]
        return arr + [0] * (m - k)

    pairs = []
    for i, heap in enumerate(_distinct(rng, draw, n)):
        pairs.append(_heap_pair(i, heap, list(enumerate(ref.decrement(heap))), steps))
    return pairs


def _list_k_examples(rng, n, hypers):
    m = hypers["const_maxInt"]
    steps = hypers["const_nTimesteps"]
    n_nodes = (m - 2) // 2

    def draw(r):
        slots = [2 + 2 * int(s) for s in r.permutation(n_nodes)]
        heap = [0] * m
        for j, a in enumerate(slots):
            heap[a] = slots[j + 1] if j + 1 < n_nodes else 0
            heap[a + 1] = int(r.integers(1, m))
        heap[0] = int(r.integers(0, n_nodes))
        heap[1] = slots[0]
        return heap

    pairs = []
    for i, heap in enumerate(_distinct(rng, draw, n)):
        pairs.append(_heap_pair(i, heap, [(0, ref.list_k(heap))], steps))
    return pairs


def _merge_examples(rng, n, hypers):
    m = hypers["const_maxInt"]
    steps = hypers["const_nTimesteps"]

    def draw(r):
        while True:
            a, b = int(r.integers(1, 4)), int(r.integers(1, 4))
            if a + b <= 5:
                break
        l1 = sorted(int(v) for v in r.integers(1, m, size=a))
        l2 = sorted(int(v) for v in r.integers(1, m, size=b))
        p1 = 3
        p2 = p1 + a + 1
        pout = p2 + b + 1
        heap = [0] * m
        heap[0], heap[1], heap[2] = p1, p2, pout
        heap[p1 : p1 + a] = l1
        heap[p2 : p2 + b] = l2
        return heap

    pairs = []
    for i, heap in enumerate(_distinct(rng, draw, n)):
        merged = ref.merge(heap)
        pout = heap[2]
        observed = [(pout + j, v) for j, v in enumerate(merged)] + [(pout + len(merged), 0)]
        pairs.append(_heap_pair(i, heap, observed, steps))
    return pairs


# -- the task table -------------------------------------------------------------------


def _turing_hypers(H, L, T, N):
    return {
        "const_nStateMem": 3,
        "const_nStateHead": H + 1,
        "const_nTimesteps": T,
        "const_tapeLength": L,
        "const_nInstances": N,
    }


def _circuit_hypers(R, T, N):
    return {"const_nGates": T, "const_nWires": R, "const_nInstances": N}


def _program_hypers(M, R, B, T, N):
    return {
        "const_nBlocks": B + 1,
        "const_nRegisters": R,
        "const_nTimesteps": T + 1,
        "const_maxInt": M,
        "const_nInstances": N,
    }


_FAMILY_MODEL = {
    "turing": "turing/turing.tpt",
    "circuits": "circuits/circuits.tpt",
    "basic_block": "basic_block/basic_block.tpt",
    "assembly": "assembly/assembly.tpt",
}

# name -> (family, hypers, sizes, generator, seed, description, gated)
_TABLE: dict = {}


def _register(name, family, hypers, sizes, gen, seed, description, gated=True):
    _TABLE[name] = (family, hypers, sizes, gen, seed, description, gated)


_register(
    "turing_invert", "turing", _turing_hypers(1, 5, 6, 5), {"H": 1, "S": 3, "T": 6},
    _turing_examples(ref.invert, 4), 101,
    "Invert every binary symbol from left to right, halting at the first blank.",
)
_register(
    "turing_prepend_zero", "turing", _turing_hypers(2, 5, 6, 5), {"H": 2, "S": 3, "T": 6},
    _turing_examples(ref.prepend_zero, 4), 102,
    "Insert a 0 at the start of the tape and shift the other symbols right; halt at the first blank.",
)
_register(
    "turing_binary_decrement", "turing", _turing_hypers(2, 5, 9, 5), {"H": 2, "S": 3, "T": 9},
    _turing_examples(ref.binary_decrement, 3, min_value=1), 103,
    "Decrement a positive binary number written most significant bit first.",
)
_register(
    "circuits_controlled_shift", "circuits", _circuit_hypers(4, 4, 8), {"H": 5, "R": 4, "T": 4},
    _circuit_examples(ref.controlled_shift, 3), 201,
    "Output (r1, r2, r3) when r1 is 0 and (r1, r3, r2) otherwise.",
)
_register(
    "circuits_full_adder", "circuits", _circuit_hypers(4, 5, 8), {"H": 5, "R": 4, "T": 5},
    _circuit_examples(ref.full_adder, 3), 202,
    "Sum and carry bits of c_in + a1 + b1.",
)
_register(
    "circuits_two_bit_adder", "circuits", _circuit_hypers(5, 8, 16), {"H": 5, "R": 5, "T": 8},
    _circuit_examples(ref.two_bit_adder, 4), 203,
    "Add two 2-bit numbers (a1, a2) and (b1, b2) into (s1, s2, c_out).",
)
_register(
    "nand_2x2", "circuits", _circuit_hypers(2, 2, 4), {"H": 5, "R": 2, "T": 2},
    _circuit_examples(ref.nand, 2), 204,
    "A NAND gate from two gates on two wires (minimal resources).",
)
_register(
    "nand_3x3", "circuits", _circuit_hypers(3, 3, 4), {"H": 5, "R": 3, "T": 3},
    _circuit_examples(ref.nand, 2), 205,
    "A NAND gate from three gates on three wires (one redundant wire and gate).",
)
for _fam, _H, _rows, _base in (
    ("basic_block", 9, {"access": (5, 2, 5, 5), "decrement": (5, 2, 5, 18), "list_k": (8, 2, 8, 11)}, 300),
    ("assembly", 10, {"access": (5, 2, 5, 5), "decrement": (5, 2, 7, 27), "list_k": (8, 2, 10, 16)}, 400),
):
    for _k, (_task, (_M, _R, _B, _T)) in enumerate(_rows.items()):
        _gen = {"access": _access_examples, "decrement": _decrement_examples, "list_k": _list_k_examples}[_task]
        _desc = {
            "access": "Copy the k-th element of a contiguous array (k in heap[0]) to heap[0].",
            "decrement": "Decrement every element of a zero-terminated contiguous array.",
            "list_k": "Copy the value of the k-th node of a linked list to heap[0].",
        }[_task]
        _register(
            f"{_fam}_{_task}", _fam, _program_hypers(_M, _R, _B, _T, 5), {"H": _H, "R": _R, "B": _B},
            _gen, _base + _k + 1, _desc,
        )
_register(
    "assembly_merge", "assembly", _program_hypers(17, 6, 22, 69, 5), {"H": 10, "R": 6, "B": 22},
    _merge_examples, 499,
    "Merge two zero-terminated sorted lists into the list at heap[2].",
    gated=False,
)

_TOY = {
    "fig7": ("toy", "toy/fig7.tpt", {}, (), (), "The gated example: infer X0, X1, X2 from X4 = 5."),
    "automaton": (
        "toy",
        "toy/automaton.tpt",
        {},
        ("tape[0].set_to_constant(1)\ntape[1].set_to_constant(0)",),
        ("tape[const_T - 1].observe_value(1)",),
        "The rule-table automaton with one input/output pair.",
    ),
    "unsat_toy": ("toy", "toy/unsat_toy.tpt", {}, (), (), "A model whose observations contradict each other."),
}

PARITY_SIZES = (4, 8, 16, 32)


def parity_chain(K: int) -> TaskSpec:
    """The parity chain of length ``K`` (all observations zero, ``x[0]`` pinned to 0)."""
    return TaskSpec(
        name=f"parity_k{K}",
        family="parity",
        model="parity/parity_chain.tpt",
        hypers={"const_K": K},
        sizes={"K": K},
        n_instances=1,
        description=f"Parity chain of length {K}; every neighbouring pair must have even parity.",
    )


def task_names() -> list:
    return [f"parity_k{k}" for k in PARITY_SIZES] + list(_TOY) + list(_TABLE)


def gen_examples(task: str, n: Optional[int] = None, rng_seed: Optional[int] = None) -> list:
    """``n`` (input snippet, output snippet) pairs for ``task``, labelled by the reference function."""
    if task not in _TABLE:
        raise KeyError(f"task {task!r} has no example generator")
    family, hypers, _sizes, gen, seed, _desc, _gated = _TABLE[task]
    n = hypers["const_nInstances"] if n is None else n
    hypers = {**hypers, "const_nInstances": n}
    rng = np.random.default_rng(seed if rng_seed is None else rng_seed)
    return gen(rng, n, hypers)


def make_task(name: str, n: Optional[int] = None, rng_seed: Optional[int] = None) -> TaskSpec:
    """Build a task from the table, generating its examples."""
    if name.startswith("parity_k"):
        return parity_chain(int(name[len("parity_k") :]))
    if name in _TOY:
        family, model, hypers, inputs, outputs, desc = _TOY[name]
        return TaskSpec(name, family, model, dict(hypers), tuple(inputs), tuple(outputs), {}, max(len(inputs), 1), desc)
    family, hypers, sizes, _gen, seed, desc, gated = _TABLE[name]
    pairs = gen_examples(name, n, rng_seed)
    hypers = {**hypers, "const_nInstances": len(pairs)}
    return TaskSpec(
        name=name,
        family=family,
        model=_FAMILY_MODEL[family],
        hypers=hypers,
        inputs=tuple(p[0] for p in pairs),
        outputs=tuple(p[1] for p in pairs),
        sizes={**sizes, **({"T": hypers["const_nGates"]} if family == "circuits" else {})},
        n_instances=len(pairs),
        description=desc,
        seed=seed if rng_seed is None else rng_seed,
        gated=gated,
    )


def builtin_tasks() -> list:
    """Every shipped task, read from the corpus directory."""
    return [load_task(name) for name in task_names()]


# -- on-disk corpus ----------------------------------------------------------------------


def write_task(task: TaskSpec, root: Optional[Path] = None) -> Path:
    """Write ``tasks/<name>/{task.json, hypers.json, io/<i>.{in,out}.tpt}``."""
    root = Path(root) if root is not None else corpus_root()
    d = root / "tasks" / task.name
    (d / "io").mkdir(parents=True, exist_ok=True)
    (d / "task.json").write_text(json.dumps(task.to_json(), indent=2, sort_keys=True) + "\n")
    (d / "hypers.json").write_text(json.dumps(task.hypers, indent=2, sort_keys=True) + "\n")
    for old in (d / "io").glob("*.tpt"):
        old.unlink()
    for i, (a, b) in enumerate(zip(task.inputs, task.outputs)):
        (d / "io" / f"{i}.in.tpt").write_text(a + "\n")
        (d / "io" / f"{i}.out.tpt").write_text(b + "\n")
    return d


def load_task(name_or_path) -> TaskSpec:
    """Read a task by name (from the shipped corpus) or from a task directory."""
    p = Path(str(name_or_path))
    if not (p / "task.json").exists():
        cand = corpus_root() / "tasks" / p.name
        if not (cand / "task.json").exists():
            raise FileNotFoundError(f"no task named {name_or_path!r}")
        p = cand
    meta = json.loads((p / "task.json").read_text())
    hypers = json.loads((p / "hypers.json").read_text())
    io = p / "io"
    count = len(list(io.glob("*.in.tpt"))) if io.exists() else 0
    inputs = tuple((io / f"{i}.in.tpt").read_text().rstrip("\n") for i in range(count))
    outputs = tuple((io / f"{i}.out.tpt").read_text().rstrip("\n") for i in range(count))
    return TaskSpec(
        name=meta["name"],
        family=meta["family"],
        model=meta["model"],
        hypers=hypers,
        inputs=inputs,
        outputs=outputs,
        sizes=meta.get("sizes", {}),
        n_instances=meta.get("n_instances", count),
        description=meta.get("description", ""),
        seed=meta.get("seed"),
        gated=meta.get("gated", True),
    )


def write_corpus(root: Optional[Path] = None) -> list:
    """Regenerate every task directory from the table (the models are hand-written)."""
    return [write_task(make_task(name), root) for name in task_names()]
