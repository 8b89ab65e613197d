"""Deterministic reductions and the worker pool used by the O(N^2) kernels.

Every sum in the package goes through :func:`pairwise_sum`. The reduction
tree depends only on the length of the reduced axis: the input is zero-padded
to the next power of two and element ``i`` is added to element ``i + half``
until one entry remains. Adding a padded ``0.0`` is exact, so the result is a
fixed function of the data, independent of how rows are split across threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

THREADS_ENV = "POHOZAEV_THREADS"


def pairwise_sum(a, axis: int = -1) -> np.ndarray | float:
    """Sum ``a`` along ``axis`` with a fixed halving tree."""
    a = np.moveaxis(np.asarray(a, dtype=float), axis, -1)
    m = a.shape[-1]
    if m == 0:
        out = np.zeros(a.shape[:-1])
        return float(out) if out.ndim == 0 else out
    size = 1 << (m - 1).bit_length()
    if size != m:
        pad = np.zeros(a.shape[:-1] + (size - m,))
        a = np.concatenate([a, pad], axis=-1)
    while a.shape[-1] > 1:
        half = a.shape[-1] // 2
        a = a[..., :half] + a[..., half:]
    out = a[..., 0]
    return float(out) if out.ndim == 0 else out


def total(a) -> float:
    """Pairwise sum of every entry of ``a`` in C order."""
    return float(pairwise_sum(np.ravel(np.asarray(a, dtype=float))))


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value >= 1:
            return value
    return os.cpu_count() or 1


def run_blocks(work: Callable[[int, int], None], size: int, block: int) -> None:
    """Call ``work(start, stop)`` on consecutive row blocks of length ``block``.

    Block boundaries do not depend on the worker count; ``work`` must write its
    results into disjoint slices so that scheduling order cannot matter.
    """
    bounds: Sequence[tuple[int, int]] = [
        (start, min(start + block, size)) for start in range(0, size, block)
    ]
    workers = min(worker_count(), len(bounds))
    if workers <= 1:
        for start, stop in bounds:
            work(start, stop)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for fut in [pool.submit(work, a, b) for a, b in bounds]:
            fut.result()
