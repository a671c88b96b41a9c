"""Deterministic seed derivation.

Every random decision in the pipeline draws from an rng whose seed is derived
from a base seed plus a named path, e.g. derive_seed(base, "mixture", t).
Derivation uses a keyed blake2b digest, never Python's builtin hash(), so any
single cell of a run matrix can be recomputed on any machine.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(base: int, *parts: str | int) -> int:
    """Map (base, parts...) to a stable 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(base)).encode("ascii"))
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def spawn_rng(base: int, *parts: str | int) -> random.Random:
    """Independent rng stream for the given derivation path."""
    return random.Random(derive_seed(base, *parts))
