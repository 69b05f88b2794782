"""
core/scheduler.py — Worker pool for ensemble sweeps

Cells and ensemble chunks are independent work units. The pool runs them
inline (one worker) or on a process pool, and always hands results back
in submission order so aggregation never depends on completion order.

Architecture:
    - Main process: submits units, aggregates by index, drives the progress bar
    - Worker processes: pure computations, BLAS threads capped to 1
"""

import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Callable, List, Optional, Sequence

import structlog
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn

from core.config import worker_count

logger = structlog.get_logger()

BLAS_THREAD_VARS = ["OMP_NUM_THREADS", "MKL_NUM_THREADS", "OPENBLAS_NUM_THREADS", "NUMEXPR_NUM_THREADS"]


def _init_worker():
    for var in BLAS_THREAD_VARS:
        os.environ.setdefault(var, "1")


class WorkerPool:
    """Deterministic parallel map over independent work units."""

    def __init__(self, workers: Optional[int] = None, show_progress: bool = False):
        self.workers = max(1, workers if workers is not None else worker_count())
        self.show_progress = show_progress

    def _progress(self) -> Progress:
        from core.ui import ui

        return Progress(
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            console=ui.err_console,
            transient=True,
            disable=not self.show_progress,
        )

    def map(self, fn: Callable[[Any], Any], items: Sequence[Any], label: str = "units") -> List[Any]:
        """Apply fn to every item; results come back in input order."""
        items = list(items)
        results: List[Any] = [None] * len(items)
        logger.info("pool_map_start", label=label, units=len(items), workers=self.workers)

        with self._progress() as progress:
            task = progress.add_task(label, total=len(items))
            if self.workers == 1 or len(items) <= 1:
                for i, item in enumerate(items):
                    results[i] = fn(item)
                    progress.advance(task)
            else:
                with ProcessPoolExecutor(max_workers=self.workers, initializer=_init_worker) as ex:
                    futures = {ex.submit(fn, item): i for i, item in enumerate(items)}
                    for fut in as_completed(futures):
                        results[futures[fut]] = fut.result()
                        progress.advance(task)

        logger.info("pool_map_done", label=label, units=len(items))
        return results
