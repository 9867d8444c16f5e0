"""Deterministic random streams.

Every stream is a Philox counter-based generator keyed by a master seed and an
integer path ``(experiment, task, replica, ...)``.  The path is fed to
:class:`numpy.random.SeedSequence` as its spawn key, so two different paths
give statistically independent streams and a given path always gives the same
stream, no matter how many other streams exist or in which order they are
created.  There is no global generator anywhere in the package.
"""

from __future__ import annotations

import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def name_code(name: str) -> int:
    """Stable integer code for a string label (CRC-32)."""
    return zlib.crc32(name.encode("utf-8"))


def stream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for ``(seed, *path)``."""
    key = tuple(int(p) for p in path)
    if any(p < 0 for p in key):
        raise ValueError("stream path components must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed) & MASK64, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def replica_streams(seed: int, path: tuple[int, ...], replicas) -> list[np.random.Generator]:
    """One stream per replica index, each keyed by ``(*path, replica)``."""
    return [stream(seed, *path, r) for r in replicas]


def stream_seed(rng: np.random.Generator) -> int:
    """Master seed a stream was created from, or -1 when unknown."""
    ss = getattr(rng.bit_generator, "seed_seq", None)
    entropy = getattr(ss, "entropy", None)
    return int(entropy) if isinstance(entropy, int) else -1
