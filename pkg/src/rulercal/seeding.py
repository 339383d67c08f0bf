"""Hierarchical, parallelism-invariant seed derivation.

Every random stream in the toolkit is derived from a single master seed
plus a path of labels (phase name, call index, replicate index, ...).
Replicate seeds therefore depend only on *what* is being simulated, never
on worker scheduling, so results are identical for any parallelism degree.
"""
from __future__ import annotations

import zlib

import numpy as np


def _encode(part) -> int:
    """Map a path component to a stable uint32 for SeedSequence spawn keys."""
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"seed path components must be non-negative, got {part}")
        return int(part)
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"unsupported seed path component: {part!r}")


def seed_sequence(master_seed: int, *path) -> np.random.SeedSequence:
    """SeedSequence for the stream identified by (master_seed, *path)."""
    return np.random.SeedSequence(master_seed, spawn_key=tuple(_encode(p) for p in path))


def derive_seed(master_seed: int, *path) -> int:
    """A single uint64 seed for the given path, e.g. to hand to a simulator."""
    return int(seed_sequence(master_seed, *path).generate_state(1, dtype=np.uint64)[0])


def generator(master_seed: int, *path) -> np.random.Generator:
    """A PCG64 generator on its own stream for the given path."""
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, *path)))
