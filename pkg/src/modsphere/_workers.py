"""Worker-count policy shared by the parallel loops."""
from __future__ import annotations

import os

THREADS_ENV = "MODSPHERE_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Number of workers to use, capped by ``MODSPHERE_THREADS`` when set."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {cap!r}") from None
    return max(1, n)
