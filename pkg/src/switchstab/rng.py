"""Reproducible random streams.

Each stream is a Philox counter-based generator whose key is derived from
``(seed, path_index, role)``; streams never overlap and can be created in any
order, on any thread, with identical output.
"""

from __future__ import annotations

import enum

import numpy as np


class StreamRole(enum.IntEnum):
    CHAIN = 0
    BROWNIAN = 1


def stream(seed: int, path_index: int = 0, role: StreamRole = StreamRole.CHAIN) -> np.random.Generator:
    if seed < 0 or path_index < 0:
        raise ValueError("seed and path_index must be nonnegative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(path_index), int(role)))
    return np.random.Generator(np.random.Philox(ss))
