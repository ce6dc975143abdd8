"""Seeded random streams and worker-count independent chunked execution.

Every stream is a Philox generator keyed by ``(seed, *key)``. Work over a
range of trials is cut into fixed-size chunks, each with its own stream, so
the output depends only on the seed and never on how many threads ran it.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

CHUNK_TRIALS = 2048


def make_rng(seed, *key: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        if key:
            raise TypeError("cannot derive a keyed stream from a Generator")
        return seed
    if seed is None or int(seed) < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def default_threads() -> int:
    env = os.environ.get("MRFCD_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def chunk_bounds(total: int, size: int = CHUNK_TRIALS) -> list[tuple[int, int]]:
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


def map_chunks(
    fn: Callable[[int, int, int], T],
    total: int,
    threads: int | None = None,
    size: int = CHUNK_TRIALS,
) -> list[T]:
    """Call ``fn(chunk_index, lo, hi)`` over fixed chunks; results in chunk order."""
    bounds = chunk_bounds(total, size)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(bounds) <= 1:
        return [fn(c, lo, hi) for c, (lo, hi) in enumerate(bounds)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, c, lo, hi) for c, (lo, hi) in enumerate(bounds)]
        return [f.result() for f in futures]


def concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)
