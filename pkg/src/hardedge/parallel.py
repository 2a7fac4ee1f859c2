"""Deterministic fan-out of Monte Carlo tasks over worker processes.

Tasks are contiguous index ranges. Each task derives its random streams
from the task index, and results are concatenated in index order, so the
output never depends on the worker count or on completion order.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

WORKERS_ENV = "HARDEDGE_WORKERS"


def worker_count(workers: int | None = None) -> int:
    """Resolve the worker count from the argument or ``HARDEDGE_WORKERS``."""
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, int(workers))


def _chunks(num_tasks: int, workers: int):
    size = max(1, -(-num_tasks // (4 * workers)))
    return [(s, min(s + size, num_tasks)) for s in range(0, num_tasks, size)]


def map_tasks(fn, num_tasks: int, args: tuple = (), *, workers: int | None = None) -> np.ndarray:
    """Evaluate ``fn(start, stop, *args)`` over chunks of ``range(num_tasks)``.

    ``fn`` must be a module-level function returning an array whose first
    axis has length ``stop - start``. Results are stacked in index order.
    """
    workers = worker_count(workers)
    if workers == 1 or num_tasks < 2:
        return np.asarray(fn(0, num_tasks, *args))
    chunks = _chunks(num_tasks, workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, s, e, *args) for s, e in chunks]
        parts = [f.result() for f in futures]
    return np.concatenate([np.asarray(p) for p in parts], axis=0)
