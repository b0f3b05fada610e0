"""Deterministic, splittable random streams.

All randomness in the toolkit flows from a single user-supplied 64-bit seed
through :func:`substream`. Streams are derived with numpy's
``SeedSequence``/``PCG64`` machinery: the seed is the entropy and the
stream path (a tuple of small integers) is the spawn key. numpy pins the
PCG64 bit stream for a given seed, so results are reproducible across
machines and numpy versions.

String path elements are hashed with crc32 so that callers can key
substreams by stable identifiers (slide ids, condition names) without
maintaining index tables.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part) & 0xFFFFFFFF


def substream(seed: int, *path) -> np.random.Generator:
    """Return the generator for ``(seed, *path)``.

    Identical arguments always yield an identical stream; distinct paths
    yield statistically independent streams.
    """
    key = tuple(_key_part(p) for p in path)
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(seq))
