"""Deterministic derivation of named RNG substreams.

Every random draw in the package flows from a single integer seed through
`substream(seed, *tags)`, where the tags name the consumer (for example
``substream(seed, "dropout", site_id, step)``).  String tags are folded to
integers with CRC32 so the derivation is stable across platforms and runs.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK32 = 0xFFFFFFFF


def _fold(tag) -> int:
    if isinstance(tag, str):
        return zlib.crc32(tag.encode("utf-8")) & _MASK32
    return int(tag) & _MASK32


def seed_sequence(seed: int, *tags) -> np.random.SeedSequence:
    entropy = [int(seed) & _MASK32] + [_fold(t) for t in tags]
    return np.random.SeedSequence(entropy)


def substream(seed: int, *tags) -> np.random.Generator:
    """Return a Generator for the substream named by ``tags``."""
    return np.random.default_rng(seed_sequence(seed, *tags))


def derive_seed(seed: int, *tags) -> int:
    """Fold a named substream back into a single 32-bit integer seed."""
    return int(seed_sequence(seed, *tags).generate_state(1, np.uint32)[0])
