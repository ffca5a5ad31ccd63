"""Plain-Python specifications of the benchmark tasks.

These functions define what each task should compute. They never touch the
DSL interpreter, so they double as the oracle for generated examples.
"""

from __future__ import annotations

BLANK = 2


# -- Turing machine tapes (lists over {0, 1, BLANK}) --------------------------


def symbols(tape) -> list:
    """The binary prefix of a tape, up to the first blank."""
    out = []
    for s in tape:
        if s == BLANK:
            break
        out.append(s)
    return out


def pad(bits, length: int) -> list:
    return list(bits) + [BLANK] * (length - len(bits))


def invert(tape) -> list:
    bits = symbols(tape)
    return pad([1 - b for b in bits], len(tape))


def prepend_zero(tape) -> list:
    bits = symbols(tape)
    if len(bits) + 1 > len(tape):
        raise ValueError("no room to prepend a symbol")
    return pad([0] + bits, len(tape))


def binary_decrement(tape) -> list:
    """Most significant bit first, same width as the input."""
    bits = symbols(tape)
    value = int("".join(map(str, bits)), 2) if bits else 0
    if value <= 0:
        raise ValueError("binary decrement needs a positive input")
    out = [int(c) for c in format(value - 1, f"0{len(bits)}b")]
    return pad(out, len(tape))


# -- Boolean circuits ----------------------------------------------------------


def controlled_shift(r1: int, r2: int, r3: int) -> tuple:
    return (r1, r2, r3) if r1 == 0 else (r1, r3, r2)


def full_adder(c_in: int, a1: int, b1: int) -> tuple:
    total = c_in + a1 + b1
    return total % 2, total // 2


def two_bit_adder(a1: int, a2: int, b1: int, b2: int) -> tuple:
    total = a1 + b1 + 2 * (a2 + b2)
    return total % 2, (total // 2) % 2, total // 4


def nand(a: int, b: int) -> tuple:
    return (1 - (a & b),)


# -- Heap tasks ----------------------------------------------------------------


def access(heap) -> int:
    """``heap[0] = k`` and the array starts at ``heap[1]``."""
    return heap[1 + heap[0]]


def decrement(heap) -> list:
    """Decrement every element before the first zero."""
    out = list(heap)
    for i, v in enumerate(heap):
        if v == 0:
            break
        out[i] = v - 1
    return out


def list_k(heap) -> int:
    """Value of the k-th node of the list whose head pointer is ``heap[1]``.

    Nodes are ``[next, value]`` pairs; ``next == 0`` ends the list.
    """
    k, p = heap[0], heap[1]
    for _ in range(k):
        p = heap[p]
        if p == 0:
            raise ValueError("list shorter than k")
    return heap[p + 1]


def merge(heap) -> list:
    """Merged contents of the two zero-terminated sorted lists at ``heap[0]`` and ``heap[1]``."""

    def read(p):
        out = []
        while heap[p] != 0:
            out.append(heap[p])
            p += 1
        return out

    return sorted(read(heap[0]) + read(heap[1]))
