"""Chunked evaluation of pointwise quantities over sample sets."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

CHUNK = 64


def thread_count() -> int:
    env = os.environ.get("CRGEO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"CRGEO_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def map_points(fn: Callable[[np.ndarray], dict], points, chunk: int = CHUNK, threads: int | None = None) -> dict:
    """Apply ``fn`` to consecutive chunks of ``points`` and concatenate the results.

    ``fn`` returns a dict of arrays whose last axis runs over the chunk's
    points.  Chunks are reassembled in order, so the result does not depend on
    the thread count.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    parts = [pts[i : i + chunk] for i in range(0, len(pts), chunk)] or [pts]
    threads = threads or thread_count()
    if threads == 1 or len(parts) == 1:
        results = [fn(p) for p in parts]
    else:
        with ThreadPoolExecutor(max_workers=min(threads, len(parts))) as pool:
            results = list(pool.map(fn, parts))
    out = {}
    for key in results[0]:
        vals = [np.asarray(r[key]) for r in results]
        out[key] = np.concatenate(vals, axis=-1) if vals[0].ndim else np.array(vals)
    return out
