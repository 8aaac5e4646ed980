from typing import Optional

from config import runtime


def worker_count(requested: Optional[int], jobs: int) -> int:
    """Worker threads for ``jobs`` tasks: the request, or GRIDTOP_THREADS, never above GRIDTOP_THREADS."""
    ceiling = max(1, runtime.GRIDTOP_THREADS)
    return max(1, min(requested or ceiling, ceiling, jobs))
