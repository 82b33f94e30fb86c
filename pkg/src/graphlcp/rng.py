"""Reproducible per-node random streams.

Each stream is a Philox generator keyed by ``(seed, node, *extra)`` so a
node's draws never depend on scheduling or on which other nodes ran.
"""

from __future__ import annotations

import numpy as np


def node_stream(seed: int, node: int, *extra: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed), int(node), *map(int, extra)])
    return np.random.Generator(np.random.Philox(ss))


def stream(seed: int, *extra: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, extra)])))
