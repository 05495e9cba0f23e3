"""Deterministic blocked Monte Carlo execution.

Every stochastic routine in the package splits its sample budget into
fixed-size blocks. Block k draws from a generator derived from
``SeedSequence(seed).spawn(...)[k]``, and block results are combined in
block order. The partition depends only on (total, block_size), never on
the worker count, so results are bit-identical for any ``workers`` value.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

DEFAULT_BLOCK = 1 << 14


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Normalize an int, tuple of ints, or SeedSequence into a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (int, np.integer)):
        return np.random.SeedSequence(int(seed))
    if isinstance(seed, (tuple, list)):
        return np.random.SeedSequence(tuple(int(s) for s in seed))
    raise TypeError(f"seed must be an int, tuple of ints, or SeedSequence, got {seed!r}")


def spawn_generators(seed, n: int) -> list[np.random.Generator]:
    """n independent generators derived deterministically from seed."""
    return [np.random.default_rng(child) for child in as_seed_sequence(seed).spawn(n)]


def block_sizes(total: int, block: int = DEFAULT_BLOCK) -> list[int]:
    """Partition a sample budget into fixed-size blocks (last one ragged)."""
    if total < 0:
        raise ValueError("total must be nonnegative")
    full, rem = divmod(total, block)
    return [block] * full + ([rem] if rem else [])


def map_blocks(
    fn: Callable[[np.random.Generator, int], T],
    total: int,
    seed,
    block: int = DEFAULT_BLOCK,
    workers: int = 1,
) -> list[T]:
    """Run ``fn(rng, count)`` over the blocked budget, results in block order.

    ``fn`` must depend only on its own generator; with that contract the
    returned list is identical for every ``workers`` value.
    """
    sizes = block_sizes(total, block)
    rngs = spawn_generators(seed, len(sizes))
    if workers <= 1 or len(sizes) <= 1:
        return [fn(rng, cnt) for rng, cnt in zip(rngs, sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, rng, cnt) for rng, cnt in zip(rngs, sizes)]
        return [f.result() for f in futures]


def combine_mean_stderr(sums: Sequence[float], sq_sums: Sequence[float], counts: Sequence[int]):
    """Pooled mean and standard error from per-block sums and squared sums."""
    n = int(sum(counts))
    if n == 0:
        raise ValueError("no samples")
    s = float(sum(sums))
    ss = float(sum(sq_sums))
    mean = s / n
    var = max(ss / n - mean * mean, 0.0)
    stderr = np.sqrt(var / n) if n > 1 else 0.0
    return mean, float(stderr), n
