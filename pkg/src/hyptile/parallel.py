"""Chunked evaluation on a thread pool, capped by HYPTILE_THREADS."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import InvalidArgument


def thread_count() -> int:
    raw = os.environ.get("HYPTILE_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise InvalidArgument(f"HYPTILE_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise InvalidArgument(f"HYPTILE_THREADS must be a positive integer, got {raw!r}")
    return n


def map_chunks(fn, *arrays, chunk: int = 4096) -> np.ndarray:
    """Apply ``fn`` to row chunks of the arrays and concatenate the results.

    Results do not depend on the number of threads: chunks are fixed by
    ``chunk`` and reassembled in order.
    """
    n = len(arrays[0])
    if n == 0:
        return fn(*arrays)
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    workers = min(thread_count(), len(bounds))
    if workers == 1:
        parts = [fn(*(a[i:j] for a in arrays)) for i, j in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: fn(*(a[b[0]:b[1]] for a in arrays)), bounds))
    return np.concatenate(parts)
