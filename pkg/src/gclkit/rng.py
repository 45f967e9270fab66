"""Deterministic random number generator derivation.

All randomness in the package funnels through seeded generators.  Independent
streams for different purposes (edge dropping, feature masking, splits, ...)
are derived from a base seed plus string tags, so adding a consumer never
shifts the stream seen by another.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *tags: object) -> int:
    """Hash (seed, tags...) into a 64-bit sub-seed, stable across runs."""
    h = hashlib.sha256()
    h.update(str(int(seed)).encode())
    for tag in tags:
        h.update(b"/")
        h.update(str(tag).encode())
    return int.from_bytes(h.digest()[:8], "little")


def rng_from(seed: int, *tags: object) -> np.random.Generator:
    """Generator for the stream named by ``tags`` under ``seed``."""
    return np.random.default_rng(derive_seed(seed, *tags))
