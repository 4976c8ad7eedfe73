"""Deterministic, scheduling-independent stream derivation.

Replicate r of a cell keyed by arbitrary components gets its own generator
derived from (base, components..., r) through SeedSequence, so streams never
overlap and do not depend on execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["key_hash", "child_rng"]


def key_hash(*components) -> int:
    """Stable 64-bit hash of heterogeneous key components."""
    digest = hashlib.blake2s(
        "\x1f".join(repr(c) for c in components).encode()
    ).digest()
    return int.from_bytes(digest[:8], "little")


def child_rng(base: int, *components) -> np.random.Generator:
    """Independent generator for one (base, key...) combination."""
    ints = tuple(
        c if isinstance(c, (int, np.integer)) else key_hash(c)
        for c in components
    )
    return np.random.default_rng(np.random.SeedSequence((int(base),) + ints))
