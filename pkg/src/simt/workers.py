"""Order-preserving worker pool for per-sentence pipeline stages.

Work items are independent and deterministic, so results are identical for
any worker count; only wall-clock time changes. Threads (not processes)
because endpoints hold sockets and pipes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from .errors import SimtError

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(
    fn: Callable[[T], R], items: Iterable[T], workers: int = 1
) -> list[tuple[R | None, SimtError | None]]:
    """Apply fn to every item, preserving input order.

    Returns one (result, error) slot per item. Toolkit errors are captured
    per item so one bad sentence cannot abort a corpus run; anything else
    (a programming bug) propagates.
    """
    items = list(items)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    def run(item: T) -> tuple[R | None, SimtError | None]:
        try:
            return fn(item), None
        except SimtError as exc:
            return None, exc

    if workers == 1 or len(items) <= 1:
        return [run(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run, item) for item in items]
        return [f.result() for f in futures]
