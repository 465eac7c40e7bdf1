"""Deterministic parallel map owned by the harness.

Work items are dispatched to a thread pool (numpy releases the GIL in the
heavy kernels) and results are reassembled in input order, so reductions see
exactly the same operand sequence whatever the worker count or scheduling.
All randomness in the modules is counter-based, never shared state.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def parallel_map(fn, items, workers: int = 1) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    out = [None] * len(items)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(fn, it): i for i, it in enumerate(items)}
        for fut, i in futures.items():
            out[i] = fut.result()
    return out


def make_pmap(workers: int):
    """Bind the worker count; modules receive this and never spawn their own."""
    def pmap(fn, items):
        return parallel_map(fn, items, workers)
    return pmap


def ordered_sum(values) -> float:
    """Pairwise summation over an index-ordered array (fixed reduction tree)."""
    return float(np.sum(np.asarray(list(values), dtype=float)))
