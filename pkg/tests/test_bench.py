import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tptsynth.bench import (
    PARITY_SIZES,
    gen_examples,
    island_configs,
    load_task,
    make_task,
    parity_chain,
    task_names,
    write_task,
)
from tptsynth.bench import reference as ref

CELL = re.compile(r"^(\w+)\[(\d+),(\d+),(\d+)\]\.(set_to_constant|observe_value)\((\d+)\)$")


def cells(snippet):
    """``{position: value}`` of a snippet, checking every line has the expected shape."""
    out = {}
    for line in snippet.splitlines():
        m = CELL.match(line)
        assert m, line
        out[int(m.group(4))] = int(m.group(6))
    return out


def as_list(d):
    assert sorted(d) == list(range(len(d)))
    return [d[i] for i in range(len(d))]


class TestReference:
    def test_invert(self):
        assert ref.invert([1, 0, 1, 2, 2]) == [0, 1, 0, 2, 2]

    def test_prepend_zero(self):
        assert ref.prepend_zero([1, 1, 2, 2, 2]) == [0, 1, 1, 2, 2]
        with pytest.raises(ValueError):
            ref.prepend_zero([1, 1, 1])

    def test_binary_decrement(self):
        assert ref.binary_decrement([1, 0, 0, 2, 2]) == [0, 1, 1, 2, 2]
        with pytest.raises(ValueError):
            ref.binary_decrement([0, 0, 2])

    def test_full_adder(self):
        assert ref.full_adder(1, 1, 1) == (1, 1)
        assert ref.full_adder(0, 1, 0) == (1, 0)

    def test_two_bit_adder(self):
        # 3 + 1 = 4
        assert ref.two_bit_adder(1, 1, 1, 0) == (0, 0, 1)

    def test_controlled_shift(self):
        assert ref.controlled_shift(1, 0, 1) == (1, 1, 0)
        assert ref.controlled_shift(0, 0, 1) == (0, 0, 1)

    def test_nand(self):
        assert [ref.nand(x, y) for x in (0, 1) for y in (0, 1)] == [(1,), (1,), (1,), (0,)]

    def test_access(self):
        assert ref.access([2, 4, 1, 3, 0]) == 3

    def test_decrement(self):
        assert ref.decrement([3, 2, 0, 5]) == [2, 1, 0, 5]

    def test_list_k(self):
        heap = [1, 2, 4, 7, 0, 9, 0, 0]
        assert ref.list_k(heap) == 9
        assert ref.list_k([0] + heap[1:]) == 7

    def test_merge(self):
        heap = [3, 6, 9, 1, 4, 0, 2, 0, 0, 0, 0, 0, 0]
        assert ref.merge(heap) == [1, 2, 4]


class TestExamples:
    @pytest.mark.parametrize("name,fn", [
        ("turing_invert", ref.invert),
        ("turing_prepend_zero", ref.prepend_zero),
        ("turing_binary_decrement", ref.binary_decrement),
    ])
    def test_turing_pairs_follow_the_reference(self, name, fn):
        pairs = gen_examples(name)
        tapes = [as_list(cells(i)) for i, _ in pairs]
        assert len({tuple(t) for t in tapes}) == len(tapes)
        for (_, out), tape in zip(pairs, tapes):
            assert as_list(cells(out)) == fn(tape)

    @pytest.mark.parametrize("name,fn,n_in", [
        ("circuits_controlled_shift", ref.controlled_shift, 3),
        ("circuits_full_adder", ref.full_adder, 3),
        ("circuits_two_bit_adder", ref.two_bit_adder, 4),
        ("nand_2x2", ref.nand, 2),
    ])
    def test_circuit_pairs_follow_the_reference(self, name, fn, n_in):
        for inp, out in gen_examples(name):
            wires = as_list(cells(inp))
            assert not any(wires[n_in:])
            assert tuple(as_list(cells(out))) == fn(*wires[:n_in])

    @pytest.mark.parametrize("family", ["basic_block", "assembly"])
    def test_heap_pairs_follow_the_reference(self, family):
        for task, fn in (("access", ref.access), ("list_k", ref.list_k)):
            for inp, out in gen_examples(f"{family}_{task}"):
                assert cells(out) == {0: fn(as_list(cells(inp)))}
        for inp, out in gen_examples(f"{family}_decrement"):
            assert as_list(cells(out)) == ref.decrement(as_list(cells(inp)))

    def test_merge_pairs_follow_the_reference(self):
        for inp, out in gen_examples("assembly_merge"):
            heap = as_list(cells(inp))
            merged = ref.merge(heap)
            assert cells(out) == {heap[2] + j: v for j, v in enumerate(merged + [0])}

    def test_same_seed_same_examples(self):
        assert gen_examples("turing_invert") == gen_examples("turing_invert")
        assert gen_examples("turing_invert", rng_seed=7) != gen_examples("turing_invert")

    def test_too_many_circuit_examples(self):
        with pytest.raises(ValueError):
            gen_examples("nand_2x2", n=5)

    def test_unknown_task(self):
        with pytest.raises(KeyError):
            gen_examples("fig7")


class TestCorpus:
    def test_names(self):
        names = task_names()
        assert len(names) == len(set(names)) == 22
        assert [n for n in names if n.startswith("parity")] == [f"parity_k{k}" for k in PARITY_SIZES]

    def test_shipped_tasks_match_the_table(self):
        for name in task_names():
            shipped, fresh = load_task(name), make_task(name)
            assert (shipped.inputs, shipped.outputs, shipped.hypers) == (fresh.inputs, fresh.outputs, fresh.hypers)

    def test_write_then_load(self, tmp_path):
        task = make_task("nand_3x3")
        d = write_task(task, tmp_path)
        again = load_task(d)
        assert again == task

    def test_missing_task(self):
        with pytest.raises(FileNotFoundError):
            load_task("no_such_task")

    def test_difficulty_only_for_program_families(self):
        assert load_task("fig7").difficulty() is None
        assert load_task("turing_invert").difficulty()["log10_D"] == pytest.approx(3.77, abs=0.005)

    def test_parity_chain(self):
        t = parity_chain(6)
        assert t.hypers == {"const_K": 6}
        g = t.compile()
        assert len(g.params) == 6

    # The heap tasks take tens of seconds each; the Sketch tests cover them.
    @pytest.mark.parametrize("name", [n for n in task_names() if not n.startswith(("basic_block", "assembly"))])
    def test_compiles(self, name):
        g = load_task(name).compile()
        assert g.params and g.factors


def _parity_loss(mu):
    """Expected number of violated links when bits are independent with P(x_i = 1) = mu_i."""
    K = len(mu)
    return sum(mu[i] * (1 - mu[(i + 1) % K]) + mu[(i + 1) % K] * (1 - mu[i]) for i in range(K))


class TestIslands:
    def test_k4(self):
        cfgs = island_configs(4)
        assert (0.0, 0.5, 1.0, 0.5) in cfgs
        assert all(0.5 in c and c[0] == 0.0 for c in cfgs)

    def test_k5_count(self):
        assert len(island_configs(5)) >= 4

    @pytest.mark.parametrize("K", [4, 5, 6, 7, 8])
    def test_islands_are_not_solutions(self, K):
        for c in island_configs(K):
            assert _parity_loss(c) > 0.5

    def test_too_small(self):
        with pytest.raises(ValueError):
            island_configs(3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=6), st.integers(0, 2))
def test_invert_is_an_involution(bits, blanks):
    tape = ref.pad(bits, len(bits) + blanks)
    assert ref.invert(ref.invert(tape)) == tape


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 1), st.integers(0, 1), st.integers(0, 1), st.integers(0, 1))
def test_two_bit_adder_adds(a1, a2, b1, b2):
    s1, s2, c = ref.two_bit_adder(a1, a2, b1, b2)
    assert s1 + 2 * s2 + 4 * c == a1 + 2 * a2 + b1 + 2 * b2
