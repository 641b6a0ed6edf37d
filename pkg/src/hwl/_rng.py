"""Seeded substreams.

Every stochastic routine splits its work into blocks whose generators are
derived from ``(seed, key...)`` only, so results never depend on how many
workers process the blocks.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_THREADS = 1


def set_threads(n: int) -> None:
    global _THREADS
    _THREADS = max(1, int(n))
    from . import kernels

    kernels.set_num_threads(_THREADS)


def get_threads() -> int:
    return _THREADS


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def default_seed(fallback: int = 0) -> int:
    value = os.environ.get("HWL_SEED")
    return int(value) if value not in (None, "") else fallback


def split_counts(total: int, parts: int) -> list[int]:
    base, extra = divmod(int(total), parts)
    return [base + (i < extra) for i in range(parts)]


def run_blocks(fn, n_blocks: int) -> list:
    """Evaluate ``fn(b)`` for every block; output order is block order."""
    if _THREADS == 1 or n_blocks == 1:
        return [fn(b) for b in range(n_blocks)]
    with ThreadPoolExecutor(max_workers=min(_THREADS, n_blocks)) as pool:
        return list(pool.map(fn, range(n_blocks)))
