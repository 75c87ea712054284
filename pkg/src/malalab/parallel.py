"""Deterministic batch fan-out over a joblib worker pool.

Work is split into batches whose boundaries depend only on the total size and
the batch size, never on the worker count. Each batch gets its own stream key,
and results come back in batch order, so any worker count yields the same
output.
"""

from typing import Callable, List, Sequence, Tuple, TypeVar

from joblib import Parallel, delayed

T = TypeVar("T")

DEFAULT_BATCH_SIZE = 50_000


def batch_sizes(total: int, batch_size: int = DEFAULT_BATCH_SIZE) -> List[Tuple[int, int]]:
    """Return ``(batch_index, size)`` pairs covering ``total`` items."""
    if total < 1:
        return []
    full, rest = divmod(total, batch_size)
    sizes = [batch_size] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def map_batches(
    fn: Callable[[int, int], T],
    batches: Sequence[Tuple[int, int]],
    workers: int = 1,
) -> List[T]:
    """Call ``fn(batch_index, size)`` for every batch and return results in order."""
    if workers <= 1 or len(batches) <= 1:
        return [fn(index, size) for index, size in batches]
    return Parallel(n_jobs=workers)(delayed(fn)(index, size) for index, size in batches)
