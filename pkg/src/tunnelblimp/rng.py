"""Seeded random-stream plumbing: every run draws all randomness from one
integer seed through named substreams, so (config, seed) fully determines a
run."""

from __future__ import annotations

import zlib

import numpy as np


def as_rng(rng) -> np.random.Generator:
    """Accept a Generator, an int seed, or None (fresh entropy)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named subsystem of a seeded run."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))
