"""Replica-level worker pool with index-ordered, deterministic reduction.

The worker count comes from the COVSPECTRA_WORKERS environment variable and
affects wall time only: jobs are pure functions of (config, replica index),
and results are reduced in input order, so any worker count produces the
same bytes.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import InvalidParameter

WORKERS_ENV = "COVSPECTRA_WORKERS"


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        count = int(raw)
    except ValueError:
        raise InvalidParameter(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if count < 1:
        raise InvalidParameter(f"{WORKERS_ENV} must be >= 1, got {count}")
    return count


def ordered_map(fn, items) -> list:
    """Map fn over items, preserving order; threads when workers > 1."""
    items = list(items)
    workers = worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
