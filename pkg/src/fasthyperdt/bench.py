"""Training-time measurements for the fast and reference backends."""

from __future__ import annotations

import time

import numpy as np

from .datagen import MixtureConfig, sample_mixture
from .reference import fit_reference
from .wrapper import HyperbolicModelSpec, fit

BENCH_COLUMNS = ("backend", "n", "dim", "depth", "repeats", "median_seconds")
DEFAULT_N_LIST = tuple(2**k for k in range(3, 16))


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def time_backends(n, dim=2, depth=3, repeats=5, n_classes=8, K=-1.0, seed=0):
    """Median training seconds ``{"fast": ..., "reference": ...}`` on one dataset.

    The two backends alternate within each repeat so that slow drifts in
    machine load hit both equally.
    """
    X, y, _ = sample_mixture(MixtureConfig(n_classes=n_classes, n_samples=n, dim=dim, K=K, seed=seed))
    spec = HyperbolicModelSpec(K=K)
    fast, ref = [], []
    for _ in range(repeats):
        fast.append(_timed(lambda: fit(X, y, spec, depth_limit=depth)))
        ref.append(_timed(lambda: fit_reference(X, y, depth_limit=depth, K=K)))
    return {"fast": float(np.median(fast)), "reference": float(np.median(ref))}


def bench_rows(n_list=DEFAULT_N_LIST, dim=2, depth=3, repeats=5, n_classes=8, K=-1.0, seed=0):
    """One row per (backend, n) in the column order of ``BENCH_COLUMNS``."""
    rows = []
    for n in n_list:
        times = time_backends(n, dim, depth, repeats, n_classes, K, seed)
        for backend in ("fast", "reference"):
            rows.append((backend, int(n), dim, depth, repeats, times[backend]))
    return rows
