"""Counter-based random streams.

Every variate is a pure function of ``(seed, stream, index)``: a stream name
is hashed to a stable integer and used as a spawn key together with a block
index, so the draws never depend on how work is split across workers.
"""
from __future__ import annotations

import zlib

import numpy as np


def stream_id(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def generator(seed: int, stream: str, *index: int) -> np.random.Generator:
    """Philox generator for ``(seed, stream, *index)``."""
    key = (stream_id(stream),) + tuple(int(i) for i in index)
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def float_key(values) -> tuple[int, ...]:
    """Exact, non-negative integer key for a vector of floats (their bit patterns)."""
    arr = np.atleast_1d(np.asarray(values, dtype=np.float64)) + 0.0  # folds -0.0 into 0.0
    return tuple(int(b) for b in arr.view(np.uint64))
