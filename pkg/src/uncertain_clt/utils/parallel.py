"""Ordered thread-pool map used for path chunks and experiment cells."""

import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

logger = logging.getLogger(__name__)

THREADS_ENV = "UCLT_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    """Worker threads: ``UCLT_THREADS`` if set to a positive integer, else the CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            logger.warning("Ignoring %s=%r: not an integer", THREADS_ENV, raw)
        else:
            if value >= 1:
                return value
            logger.warning("Ignoring %s=%r: must be >= 1", THREADS_ENV, raw)
    return os.cpu_count() or 1


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """Apply ``fn`` to every item, results in input order.

    Runs inline with a single worker; results never depend on the worker count.
    """
    batch = list(items)
    count = workers if workers is not None else worker_count()
    if count <= 1 or len(batch) <= 1:
        return [fn(item) for item in batch]
    with ThreadPoolExecutor(max_workers=min(count, len(batch))) as executor:
        return list(executor.map(fn, batch))
