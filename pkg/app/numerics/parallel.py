"""
app/numerics/parallel.py

Ordered thread-pool map. Each item is computed independently and results come
back in input order, so reports do not depend on the worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_MAX_WORKERS = int(os.getenv("STEKLOV_MAX_WORKERS", "4"))


def ordered_map(fn: Callable[[T], R], items: Iterable[T], max_workers: int | None = None) -> list[R]:
    items = list(items)
    workers = DEFAULT_MAX_WORKERS if max_workers is None else max_workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
