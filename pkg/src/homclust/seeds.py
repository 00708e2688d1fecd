"""Deterministic seed derivation shared by every randomized stage."""

from __future__ import annotations

import hashlib

import numpy as np

DEFAULT_SEED = 1729


def _tag_int(tag: object) -> int:
    digest = hashlib.sha256(repr(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(base_seed: int, *tags: object) -> np.random.Generator:
    """A generator determined only by the base seed and the tag path.

    Independent of call order, so parallel and sequential schedules produce
    identical streams.
    """
    entropy = [int(base_seed) & 0xFFFFFFFFFFFFFFFF] + [_tag_int(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))
