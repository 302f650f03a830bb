"""MRF ground-truth generation and Gaussian degradation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from . import _kernels
from .core import LevelImage, RngStream, level_luminances, normalize_seed
from .model import AnnealSchedule, NoiseModel
from .samplers import run_partitioned

# Reproducible stand-in for the hand-tuned temperature used to grow patchy fields.
DEFAULT_GENERATION_SCHEDULE = AnnealSchedule(beta0=0.4, increment=0.1, period=50, total_steps=400)


@dataclass(frozen=True)
class MrfGenSpec:
    size: Tuple[int, int] = (256, 256)
    levels: int = 5
    coupling: float = 1.0 / 3.0
    schedule: AnnealSchedule = DEFAULT_GENERATION_SCHEDULE
    seed: int = 0

    def __post_init__(self):
        width, height = self.size
        if width < 1 or height < 1:
            raise ValueError(f"size must be positive, got {self.size}")
        if self.levels < 2:
            raise ValueError(f"levels must be >= 2, got {self.levels}")
        if not self.coupling > 0:
            raise ValueError(f"coupling must be positive, got {self.coupling}")


def generate_mrf(spec: MrfGenSpec) -> LevelImage:
    """Sample a Potts-like field with prior-only Gibbs sweeps from i.i.d. levels."""
    width, height = spec.size
    seed = np.uint64(normalize_seed(spec.seed))
    x = np.empty(width * height, dtype=np.uint8 if spec.levels <= 256 else np.uint16)
    _kernels.uniform_levels(x.shape[0], spec.levels, seed, x)
    dummy_g = np.zeros(1, dtype=x.dtype)
    dummy_table = np.zeros((1, 1))
    for t in range(spec.schedule.total_steps):
        beta = spec.schedule.beta_at(t)
        _kernels.gibbs_sweep_inplace(
            x, dummy_g, height, width, spec.levels, 2.0 * beta * spec.coupling,
            dummy_table, False, seed, _kernels.STAGE_MRF, t)
    return LevelImage(width, height, spec.levels, x)


def gaussian_draw(stream: RngStream, sigma: float) -> float:
    """``sigma`` times a Box-Muller standard normal from the stream's counter."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return sigma * float(_kernels.standard_normal(
        np.uint64(stream.seed), stream.stage_id, stream.step, stream.site))


def gaussian_draws(seed: int, n: int, sigma: float = 1.0, stage: str = "noise") -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    stream = RngStream(seed, stage)
    return sigma * _kernels.normal_block(np.uint64(stream.seed), stream.stage_id, 0, n)


def degrade(x: LevelImage, noise: NoiseModel, seed: int, n_threads: int = 1) -> LevelImage:
    """Add per-site Gaussian noise in luminance, clamp to [0, 1], requantise."""
    if x.levels < 2:
        return x
    out = np.empty_like(x.data)
    lum = level_luminances(x.levels)
    seed = np.uint64(normalize_seed(seed))

    def work(start, stop):
        _kernels.degrade_range(x.data, out, lum, noise.sigma, seed, start, stop)
        return 0

    run_partitioned(work, x.n_sites, n_threads)
    return x.with_data(out)
