"""Island configurations of the parity chain.

Pick one of the two alternating position classes, give those positions 0/1
values (position 0 is always the pinned 0), and fill every remaining
position ``i`` from its ring neighbours: ``.5`` when exactly one neighbour is
1, otherwise the common neighbour value. Configurations without any ``.5``
entry are either the global optimum or plain wrong assignments and are left
out.
"""

from __future__ import annotations

import itertools


def island_configs(K: int) -> list:
    if K < 4:
        raise ValueError("island configurations need K >= 4")
    seen = set()
    out = []
    for parity in (0, 1):
        chosen = sorted({i for i in range(K) if i % 2 == parity} | {0})
        free = [i for i in chosen if i != 0]
        for bits in itertools.product((0, 1), repeat=len(free)):
            mu = [None] * K
            mu[0] = 0.0
            for i, b in zip(free, bits):
                mu[i] = float(b)
            for i in range(K):
                if mu[i] is None:
                    a, c = mu[(i - 1) % K], mu[(i + 1) % K]
                    mu[i] = 0.5 if a + c == 1 else a
            cfg = tuple(mu)
            if 0.5 not in cfg or cfg in seen:
                continue
            seen.add(cfg)
            out.append(cfg)
    return out
