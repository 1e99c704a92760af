"""Counter-based random streams and order-preserving parallel execution.

Every stream is a Philox generator keyed by (master seed, *path), so a trial or
batch draws the same numbers no matter which thread runs it or in what order.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

DEFAULT_SEED = 20170611

# stream tags, so that unrelated experiments sharing a seed never share numbers
NOISE = 1
CODEBOOK = 2
WALK = 3
WRAPPER = 4
MESSAGES = 5


def substream(seed: int, *path: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def batch_slices(n: int, batch: int) -> list[tuple[int, int]]:
    """Fixed partition of range(n) into consecutive batches; independent of threads."""
    return [(s, min(s + batch, n)) for s in range(0, n, batch)]


def ordered_map(fn: Callable[[T], object], items: Sequence[T] | Iterable[T], threads: int = 1) -> list:
    """map() whose result order is the input order, optionally over a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()) if x.size else float("nan"), float("inf")
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def ratio_se(num, den) -> tuple[float, float]:
    """mean(num)/mean(den) and its delta-method standard error."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    r = num.mean() / den.mean()
    resid = num - r * den
    return float(r), float(resid.std(ddof=1) / (abs(den.mean()) * np.sqrt(num.size)))


def var_se(x) -> tuple[float, float]:
    """Unbiased sample variance and its large-sample standard error."""
    x = np.asarray(x, dtype=float)
    n = x.size
    v = x.var(ddof=1)
    m4 = np.mean((x - x.mean()) ** 4)
    return float(v), float(np.sqrt(max(m4 - v * v * (n - 3) / (n - 1), 0.0) / n))


def binomial_se(p: float, n: int) -> float:
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / n)) if n else float("inf")
