"""Deterministic random streams.

A master seed is expanded with :class:`numpy.random.SeedSequence` entropy
lists ``[seed, tag, *indices]``. Run loops are cut into fixed-size chunks and
chunk ``c`` always draws from the stream ``[seed, tag, c]``, so transcripts
do not depend on how many worker threads process the chunks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

CHUNK_SIZE = 1 << 16

# stream tags; never renumber, outputs depend on them
TAG_RUNS = 1
TAG_SETTINGS = 2
TAG_HEAT = 3
TAG_REPETITION = 4
TAG_CRITERION = 5

T = TypeVar("T")


def stream(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, path)]))


def derive_seed(seed: int, *path: int) -> int:
    """Child seed (a 63-bit int) for sub-experiments, e.g. sweep repetitions."""
    ss = np.random.SeedSequence([int(seed), *map(int, path)])
    return int(ss.generate_state(2, dtype=np.uint32).astype(np.uint64) @ np.array([1 << 31, 1], dtype=np.uint64))


def chunk_bounds(n: int, size: int = CHUNK_SIZE) -> list[tuple[int, int]]:
    return [(start, min(start + size, n)) for start in range(0, n, size)]


def map_chunks(fn: Callable[[int, int, int], T], n: int, threads: int = 1) -> list[T]:
    """Call ``fn(chunk_index, start, stop)`` for every chunk, results in chunk order."""
    jobs = chunk_bounds(n)
    if threads <= 1 or len(jobs) <= 1:
        return [fn(i, a, b) for i, (a, b) in enumerate(jobs)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, i, a, b) for i, (a, b) in enumerate(jobs)]
        return [f.result() for f in futures]
