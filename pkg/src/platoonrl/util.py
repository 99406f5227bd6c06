"""Seeding, hashing and formatting helpers shared across modules."""
from __future__ import annotations

import hashlib

import numpy as np


def rng_from(*key) -> np.random.Generator:
    """Deterministic generator derived from a tuple of ints/strings.

    String components are folded to stable 32-bit values so the stream only
    depends on the key contents, never on interpreter state.
    """
    entropy = []
    for part in key:
        if isinstance(part, str):
            digest = hashlib.sha256(part.encode()).digest()
            entropy.append(int.from_bytes(digest[:4], "little"))
        else:
            entropy.append(int(part) & 0xFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def array_hash(*arrays) -> str:
    """SHA-256 over the raw bytes of float64 arrays (order-sensitive)."""
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
    return h.hexdigest()


def fmt(x) -> str:
    """Shortest exact decimal form of a float (round-trips via float())."""
    return repr(float(x))
