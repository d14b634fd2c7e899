"""Deterministic random streams.

Every consumer of randomness derives its own generator from (seed, label),
so adding a new consumer never perturbs existing streams. The label is
hashed with crc32 and mixed into a SeedSequence alongside the seed.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, label: str) -> np.random.Generator:
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), key]))
