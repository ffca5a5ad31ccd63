"""Search-space size of the benchmark execution models.

``D`` counts the programs a brute-force enumerator would have to visit. The
numbers get large quickly, so only ``log10 D`` is ever computed.
"""

from __future__ import annotations

import math

FAMILIES = ("turing", "circuits", "basic_block", "assembly")


def _log_d(family: str, sizes: dict) -> float:
    lg = math.log10
    if family == "turing":
        # Each (state, head symbol) pair picks a new symbol, a move and a next state.
        s = sizes.get("S", 3)
        h = sizes["H"]
        return s * h * lg(3 * s * (h + 1))
    if family == "circuits":
        # Each of T gates picks one of H gate types and three of R wires.
        h, r, t = sizes["H"], sizes["R"], sizes["T"]
        return t * lg(h) + 3 * t * lg(r)
    if family == "basic_block":
        # Per block: instruction, two args, output register, branch register, two successors.
        h, r, b = sizes["H"], sizes["R"], sizes["B"]
        return b * (lg(h) + 4 * lg(r) + 2 * lg(b + 1))
    if family == "assembly":
        # Per line: instruction, two args, output register, jump target.
        h, r, b = sizes["H"], sizes["R"], sizes["B"]
        return b * (lg(h) + 3 * lg(r) + lg(b + 1))
    raise ValueError(f"unknown model family {family!r}; expected one of {', '.join(FAMILIES)}")


def difficulty_metrics(model_family: str, T: int | None = None, **sizes: int) -> dict:
    """Return ``{"log10_D": float, "T": T}`` for one benchmark row.

    >>> round(difficulty_metrics("circuits", H=5, R=5, T=8)["log10_D"], 2)
    22.37
    """
    for k, v in sizes.items():
        if not isinstance(v, int) or v <= 0:
            raise ValueError(f"size {k} must be a positive integer, got {v!r}")
    if model_family == "circuits":
        if T is None:
            raise ValueError("the circuits family needs the gate count T")
        sizes = {**sizes, "T": T}
    return {"log10_D": _log_d(model_family, sizes), "T": T}
