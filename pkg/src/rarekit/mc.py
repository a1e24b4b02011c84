"""Seeded, chunked Monte Carlo plumbing shared by every estimator.

Work is split into fixed-size chunks. Chunk ``i`` draws from its own stream,
``SeedSequence(seed, spawn_key=(i,))``, and partial results are reduced in
chunk-index order, so an estimate depends only on ``(seed, n)`` and never on
the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

CHUNK_SIZE = 1 << 17
MAX_SEED = 2**64


class InfeasibleError(ValueError):
    """A requested estimate cannot be resolved with the given budget."""


@dataclass(frozen=True)
class EstimateCI:
    """Monte Carlo estimate with its standard error and provenance."""

    value: float
    std_error: float
    n_samples: int
    seed: int

    def __post_init__(self):
        if not math.isfinite(self.std_error) or self.std_error < 0:
            raise ValueError(f"std_error must be finite and >= 0, got {self.std_error}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")

    def interval(self, z: float = 3.0) -> tuple[float, float]:
        return self.value - z * self.std_error, self.value + z * self.std_error

    def scaled(self, factor: float) -> "EstimateCI":
        return EstimateCI(float(self.value * factor), float(self.std_error * abs(factor)), self.n_samples, self.seed)

    def to_json(self) -> dict:
        return asdict(self)


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed < MAX_SEED:
        raise ValueError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


def default_threads() -> int:
    return max(1, int(os.environ.get("RAREKIT_THREADS", "1")))


def chunk_plan(n: int, chunk_size: int = CHUNK_SIZE) -> List[int]:
    if n < 1:
        raise ValueError("budget must be >= 1")
    full, rest = divmod(n, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def map_chunks(
    fn: Callable[[np.random.Generator, int], T],
    seed: int,
    n: int,
    threads: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> List[T]:
    """Run ``fn(rng, size)`` over the chunk plan; results come back in chunk order."""
    seed = check_seed(seed)
    sizes = chunk_plan(n, chunk_size)

    def work(i: int) -> T:
        return fn(chunk_rng(seed, i), sizes[i])

    if threads <= 1 or len(sizes) == 1:
        return [work(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, range(len(sizes))))


def sum_chunks(parts: Sequence[np.ndarray]) -> np.ndarray:
    total = np.zeros_like(np.asarray(parts[0]))
    for p in parts:
        total = total + p
    return total


def binomial_estimate(hits: int, n: int, seed: int) -> EstimateCI:
    p = hits / n
    return EstimateCI(float(p), float(math.sqrt(p * (1.0 - p) / n)), int(n), int(seed))


def mean_estimate(total: float, total_sq: float, n: int, seed: int) -> EstimateCI:
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    se = math.sqrt(var / (n - 1)) if n > 1 else 0.0
    return EstimateCI(float(mean), float(se), int(n), int(seed))
