"""Annealed systematic Gibbs sweeps and lazy-PCA steps."""
from __future__ import annotations

import csv
import functools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .core import LevelImage, check_same_lattice, normalize_seed
from .model import AnnealSchedule, NoiseModel, PcaParams, PriorParams, data_table

METHODS = ("gibbs", "pca")


@dataclass(frozen=True)
class ChainState:
    current: LevelImage
    step: int = 0
    seed: int = 0
    schedule: AnnealSchedule = AnnealSchedule()

    def __post_init__(self):
        if not 0 <= self.step <= self.schedule.total_steps:
            raise ValueError(
                f"step {self.step} outside [0, {self.schedule.total_steps}]")
        object.__setattr__(self, "seed", normalize_seed(self.seed))

    @property
    def beta(self) -> float:
        return self.schedule.beta_at(self.step)


@dataclass(frozen=True)
class TransitionRecord:
    step: int
    beta: float
    changed_sites: int
    beta_hg: float


def default_threads() -> int:
    return os.cpu_count() or 1


@functools.lru_cache(maxsize=None)
def _pool(n_threads: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=n_threads, thread_name_prefix="pca")


def partition(n: int, parts: int) -> List[Tuple[int, int]]:
    """Split ``range(n)`` into at most ``parts`` contiguous, near-equal chunks."""
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_partitioned(fn: Callable[[int, int], int], n: int, n_threads: int) -> int:
    """Apply ``fn(start, stop)`` over contiguous chunks; returns the summed result."""
    chunks = partition(n, n_threads)
    if len(chunks) <= 1:
        return sum(fn(a, b) for a, b in chunks)
    return sum(_pool(len(chunks)).map(lambda ab: fn(*ab), chunks))


def _check_inputs(state: ChainState, g: LevelImage):
    check_same_lattice(state.current, g)
    if state.step >= state.schedule.total_steps:
        raise ValueError(
            f"chain already at step {state.step} of {state.schedule.total_steps}")


def gibbs_sweep(state: ChainState, g: LevelImage, prior: PriorParams,
                noise: NoiseModel) -> ChainState:
    """One column-major sweep at the schedule's beta for ``state.step``."""
    new, _ = _gibbs_sweep(state, g, prior, noise)
    return new


def _gibbs_sweep(state, g, prior, noise):
    _check_inputs(state, g)
    x = state.current
    buf = np.array(x.data)
    beta = state.beta
    changed = _kernels.gibbs_sweep_inplace(
        buf, g.data, x.height, x.width, x.levels, 2.0 * beta * prior.coupling,
        data_table(x.levels, noise), True, np.uint64(state.seed),
        _kernels.STAGE_GIBBS, state.step)
    return replace(state, current=x.with_data(buf), step=state.step + 1), int(changed)


def pca_step(state: ChainState, g: LevelImage, prior: PriorParams, noise: NoiseModel,
             pca: PcaParams, n_threads: int = 1) -> ChainState:
    """Update every site independently from the old configuration.

    Sites are split into contiguous chunks over ``n_threads`` workers; the
    output does not depend on the split.
    """
    new, _ = _pca_step(state, g, prior, noise, pca, n_threads)
    return new


def _pca_step(state, g, prior, noise, pca, n_threads=1):
    _check_inputs(state, g)
    x = state.current
    old = x.data
    new = np.empty_like(old)
    beta = state.beta
    coupling2b = 2.0 * beta * prior.coupling * pca.field_scale
    dt = data_table(x.levels, noise) * pca.field_scale
    inert = beta * pca.cost_table(x.levels)
    seed = np.uint64(state.seed)

    def work(start, stop):
        return _kernels.pca_update_range(
            old, new, g.data, x.height, x.width, x.levels, coupling2b, dt, inert,
            seed, state.step, start, stop)

    changed = run_partitioned(work, x.n_sites, n_threads)
    return replace(state, current=x.with_data(new), step=state.step + 1), int(changed)


def run_chain(initial: LevelImage, g: LevelImage, prior: PriorParams, noise: NoiseModel,
              schedule: AnnealSchedule, method: str = "gibbs",
              pca: Optional[PcaParams] = None, seed: int = 0, n_threads: int = 1,
              checkpoint_every: Optional[int] = None,
              on_checkpoint: Optional[Callable[[int, LevelImage], None]] = None,
              ) -> Tuple[LevelImage, List[TransitionRecord]]:
    """Run ``schedule.total_steps`` steps and return the last state and the trace.

    ``on_checkpoint(step, image)`` is called after every ``checkpoint_every``
    completed steps.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if method == "pca" and pca is None:
        raise ValueError("method 'pca' requires PcaParams")
    check_same_lattice(initial, g)
    if checkpoint_every is not None and checkpoint_every < 1:
        raise ValueError("checkpoint_every must be a positive integer")
    if n_threads < 1:
        raise ValueError("n_threads must be >= 1")

    state = ChainState(initial, 0, seed, schedule)
    dt = data_table(initial.levels, noise)
    trace = []
    while state.step < schedule.total_steps:
        beta = state.beta
        if method == "gibbs":
            state, changed = _gibbs_sweep(state, g, prior, noise)
        else:
            state, changed = _pca_step(state, g, prior, noise, pca, n_threads)
        x = state.current
        beta_hg = (beta * _kernels.prior_energy_flat(x.data, x.height, x.width, prior.coupling)
                   + _kernels.data_energy_flat(x.data, g.data, dt))
        trace.append(TransitionRecord(state.step - 1, beta, changed, float(beta_hg)))
        if checkpoint_every and on_checkpoint and state.step % checkpoint_every == 0:
            on_checkpoint(state.step, x)
    return state.current, trace


TRACE_COLUMNS = ("step", "beta", "changed_sites", "beta_Hg")


def write_trace_csv(path, trace: Sequence[TransitionRecord]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in trace:
            writer.writerow([rec.step, repr(rec.beta), rec.changed_sites, repr(rec.beta_hg)])


def read_trace_csv(path) -> List[TransitionRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace columns {reader.fieldnames}")
        return [TransitionRecord(int(row["step"]), float(row["beta"]),
                                 int(row["changed_sites"]), float(row["beta_Hg"]))
                for row in reader]
