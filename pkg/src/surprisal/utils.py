"""Shared plumbing: thread cap and deterministic chunked simulation."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "SURPRISAL_THREADS"


def thread_count() -> int:
    """Parallelism cap from the SURPRISAL_THREADS env var (default 1)."""
    raw = os.environ.get(THREADS_ENV, "")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


def parallel_map(fn, items):
    """Map preserving order, threaded when SURPRISAL_THREADS > 1."""
    workers = thread_count()
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def parallel_chunks(fn, total: int, chunk: int, seed: int) -> np.ndarray:
    """Concatenate fn(count, rng) over chunks of work.

    Each chunk gets its own generator spawned from the master seed, so the
    result is identical whatever the thread count or chunk boundaries within
    a fixed chunk size.
    """
    counts = []
    remaining = total
    while remaining > 0:
        take = min(chunk, remaining)
        counts.append(take)
        remaining -= take
    seqs = np.random.SeedSequence(seed).spawn(len(counts))
    jobs = [(c, np.random.default_rng(s)) for c, s in zip(counts, seqs)]
    parts = parallel_map(lambda job: fn(job[0], job[1]), jobs)
    return np.concatenate(parts)


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent per-replication generators from one master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]
