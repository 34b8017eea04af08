from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple, TypeVar

import numpy as np
from tqdm import tqdm

from src.config import MC_CHUNK, THREADS

R = TypeVar("R")

_threads = THREADS


def set_threads(threads: int) -> None:
    """Cap worker parallelism for every chunked map in the process."""
    global _threads
    _threads = max(1, int(threads))


def get_threads() -> int:
    return _threads


def chunk_bounds(start: int, count: int, chunk: int = MC_CHUNK) -> List[Tuple[int, int]]:
    """
    Fixed chunk boundaries over stream indices [start, start + count).

    Boundaries depend only on the index range, never on the thread count, so the
    per-chunk partial results are the same however many workers run them.
    """
    return [(lo, min(lo + chunk, start + count)) for lo in range(start, start + count, chunk)]


def ordered_map(func: Callable, items: Sequence, desc: str = None) -> List:
    """
    Apply func to every item on the worker pool, returning results in item order.

    Args:
        func (Callable): Worker.
        items (Sequence): Work items.
        desc (str, optional): Progress bar label; no bar when None.

    Returns:
        List: func(item) for every item, in order.
    """
    items = list(items)
    progress = tqdm(total=len(items), desc=desc, disable=desc is None or len(items) < 2, leave=False)
    try:
        if _threads == 1 or len(items) < 2:
            results = []
            for item in items:
                results.append(func(item))
                progress.update()
            return results
        with ThreadPoolExecutor(max_workers=_threads) as pool:
            futures = [pool.submit(func, item) for item in items]
            results = []
            for future in futures:
                results.append(future.result())
                progress.update()
            return results
    finally:
        progress.close()


def chunked_map(func: Callable[[int, int], R], start: int, count: int, chunk: int = MC_CHUNK,
                desc: str = None) -> List[R]:
    """
    Apply func(lo, hi) to fixed chunks of an index range, in chunk order.

    Args:
        func (Callable): Worker taking a half-open index range.
        start (int): First index.
        count (int): Number of indices.
        chunk (int): Chunk length.
        desc (str, optional): Progress bar label; no bar when None.

    Returns:
        List: One result per chunk, in index order.
    """
    return ordered_map(lambda bounds: func(*bounds), chunk_bounds(start, count, chunk), desc)


def tree_sum(parts: Sequence):
    """
    Pairwise reduction in a fixed tree order.

    Args:
        parts (Sequence): Scalars or equally shaped arrays.

    Returns:
        The sum, reduced as ((p0 + p1) + (p2 + p3)) + ...
    """
    items = list(parts)
    if not items:
        return 0.0
    while len(items) > 1:
        paired = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            paired.append(items[-1])
        items = paired
    return items[0]


def concatenate(parts: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate(list(parts)) if parts else np.array([])
