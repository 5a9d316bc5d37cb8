"""Deterministic, order-independent random streams.

Every stochastic operation in the package draws from a stream obtained
here. Streams are keyed by a root seed plus a tuple of string/int tags
(e.g. sensor id, modality, round index), so two streams with different
tags never overlap and results do not depend on the order in which
parallel workers consume them.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = b"\x1f"


def _digest(seed: int, tags: tuple) -> bytes:
    h = hashlib.sha256()
    h.update(str(int(seed)).encode())
    for tag in tags:
        h.update(_SEP)
        h.update(str(tag).encode())
    return h.digest()


def derive_key(seed: int, *tags) -> int:
    """128-bit counter-based key for the (seed, tags) stream."""
    return int.from_bytes(_digest(seed, tags)[:16], "little")


def derive_seed(seed: int, *tags) -> int:
    """64-bit child seed, suitable for passing on as a new root seed."""
    return int.from_bytes(_digest(seed, tags)[16:24], "little")


def stream(seed: int, *tags) -> np.random.Generator:
    """Generator backed by Philox with a key derived from (seed, tags)."""
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *tags)))


def entropy_seed() -> int:
    """Fresh 64-bit seed from OS entropy (for runs without --seed)."""
    return int.from_bytes(np.random.SeedSequence().entropy.to_bytes(16, "little")[:8], "little")
