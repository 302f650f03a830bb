"""Wall-clock throughput of pca_step across worker counts, with a Gibbs baseline."""
from __future__ import annotations

import os
import time
from typing import Iterable, Optional

from .core import LevelImage
from .model import AnnealSchedule, NoiseModel, PcaParams, PriorParams
from .samplers import ChainState, _gibbs_sweep, _pca_step
from .synthesis import degrade


def default_thread_counts(max_threads: Optional[int] = None):
    top = max_threads or os.cpu_count() or 1
    counts, k = [], 1
    while k <= top:
        counts.append(k)
        k *= 2
    if counts[-1] != top:
        counts.append(top)
    return counts


def _time_steps(step_fn, state, repeats):
    best = float("inf")
    updates = 0
    for _ in range(repeats):
        t0 = time.perf_counter()
        _, updates = step_fn(state)
        best = min(best, time.perf_counter() - t0)
    return best, updates


def run_benchmark(width: int = 512, height: int = 512, levels: int = 5,
                  thread_counts: Optional[Iterable[int]] = None, repeats: int = 3,
                  prior: PriorParams = PriorParams(), noise: NoiseModel = NoiseModel(),
                  pca: PcaParams = PcaParams(), beta: float = 1.25, seed: int = 0) -> dict:
    """Best-of-``repeats`` timing of one step per configuration."""
    g = degrade(LevelImage.constant(width, height, levels, levels // 2), noise, seed)
    state = ChainState(g, 0, seed, AnnealSchedule(beta, 0.0, 1, 1))
    n = g.n_sites

    # warm the compiled kernels before timing
    _gibbs_sweep(state, g, prior, noise)
    _pca_step(state, g, prior, noise, pca, 1)

    def gibbs_fn(s):
        new, _ = _gibbs_sweep(s, g, prior, noise)
        return new, n

    g_time, g_updates = _time_steps(gibbs_fn, state, repeats)
    report = {
        "width": width,
        "height": height,
        "levels": levels,
        "cpu_count": os.cpu_count(),
        "repeats": repeats,
        "gibbs": {
            "threads": 1,
            "seconds_per_sweep": g_time,
            "site_updates_per_sweep": g_updates,
            "site_updates_per_second": g_updates / g_time,
        },
        "pca": [],
    }
    counts = sorted(set(thread_counts or default_thread_counts()) | {1})
    base = None
    for k in counts:
        def pca_fn(s, k=k):
            new, _ = _pca_step(s, g, prior, noise, pca, k)
            return new, n

        pca_fn(state)
        t, updates = _time_steps(pca_fn, state, repeats)
        base = base or t
        report["pca"].append({
            "threads": k,
            "seconds_per_step": t,
            "site_updates_per_step": updates,
            "site_updates_per_second": updates / t,
            "speedup": base / t,
        })
    return report
