"""Lattice images, Moore neighbourhoods, indexing and counter-based draws."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from . import _kernels

Site = Tuple[int, int]

_STAGES = {
    "init": _kernels.STAGE_INIT,
    "mrf": _kernels.STAGE_MRF,
    "noise": _kernels.STAGE_NOISE,
    "gibbs": _kernels.STAGE_GIBBS,
    "pca": _kernels.STAGE_PCA,
}
_SEED_MASK = (1 << 64) - 1


class Neighborhood(enum.Enum):
    MOORE8 = "moore8"


def _level_dtype(levels: int):
    return np.uint8 if levels <= 256 else np.uint16


@dataclass(frozen=True, eq=False)
class LevelImage:
    """Rectangular lattice of gray-level indices.

    ``data`` is the flat column-major array (linear index ``c * height + r``);
    the luminance of level ``k`` is ``k / (levels - 1)``. A single-level image
    is accepted as a degenerate case whose only luminance is 0.
    """

    width: int
    height: int
    levels: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be positive, got {self.width}x{self.height}")
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        data = np.asarray(self.data)
        if data.ndim != 1 or data.shape[0] != self.width * self.height:
            raise ValueError(
                f"data must be flat with {self.width * self.height} entries, got shape {data.shape}")
        if data.size and (data.min() < 0 or data.max() >= self.levels):
            raise ValueError(f"level indices must lie in [0, {self.levels - 1}]")
        data = data.astype(_level_dtype(self.levels), copy=True)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array, levels: int) -> "LevelImage":
        """Build from a (height, width) array of level indices."""
        array = np.asarray(array)
        if array.ndim != 2:
            raise ValueError(f"expected a 2-D array, got {array.ndim}-D")
        if not np.issubdtype(array.dtype, np.integer):
            if not np.all(np.equal(np.mod(array, 1), 0)):
                raise ValueError("level arrays must hold integers")
        height, width = array.shape
        return cls(width, height, levels, np.ravel(array, order="F").astype(np.int64))

    @classmethod
    def constant(cls, width: int, height: int, levels: int, level: int) -> "LevelImage":
        return cls(width, height, levels, np.full(width * height, level, dtype=np.int64))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    @property
    def n_sites(self) -> int:
        return self.width * self.height

    def to_array(self) -> np.ndarray:
        """(height, width) view of the level indices."""
        return self.data.reshape((self.height, self.width), order="F")

    def luminance(self) -> np.ndarray:
        """(height, width) float array of luminances in [0, 1]."""
        return level_luminances(self.levels)[self.to_array()]

    def with_data(self, data) -> "LevelImage":
        return LevelImage(self.width, self.height, self.levels, data)

    def same_lattice(self, other: "LevelImage") -> bool:
        return (self.width, self.height, self.levels) == (other.width, other.height, other.levels)

    def __eq__(self, other):
        if not isinstance(other, LevelImage):
            return NotImplemented
        return self.same_lattice(other) and bool(np.array_equal(self.data, other.data))

    __hash__ = None


def level_luminances(levels: int) -> np.ndarray:
    if levels == 1:
        return np.zeros(1)
    return np.arange(levels) / (levels - 1)


def check_same_lattice(x: LevelImage, y: LevelImage):
    if (x.width, x.height) != (y.width, y.height):
        raise ValueError(f"dimension mismatch: {x.width}x{x.height} vs {y.width}x{y.height}")
    if x.levels != y.levels:
        raise ValueError(f"level-count mismatch: {x.levels} vs {y.levels}")


def _check_site(dims, site):
    width, height = dims
    r, c = site
    if not (0 <= r < height and 0 <= c < width):
        raise IndexError(f"site {site} outside a {width}x{height} image")


def neighbors(dims: Tuple[int, int], site: Site,
              kind: Neighborhood = Neighborhood.MOORE8) -> List[Site]:
    """In-bounds Moore neighbours of ``site``; ``dims`` is (width, height)."""
    if kind is not Neighborhood.MOORE8:
        raise ValueError(f"unsupported neighbourhood {kind}")
    _check_site(dims, site)
    width, height = dims
    r, c = site
    out = []
    for dc in (-1, 0, 1):
        for dr in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            p, q = r + dr, c + dc
            if 0 <= p < height and 0 <= q < width:
                out.append((p, q))
    return out


def to_linear(site: Site, height: int) -> int:
    r, c = site
    if not 0 <= r < height or c < 0:
        raise IndexError(f"site {site} invalid for height {height}")
    return c * height + r


def from_linear(index: int, height: int) -> Site:
    if index < 0 or height < 1:
        raise IndexError(f"linear index {index} invalid for height {height}")
    c, r = divmod(index, height)
    return (r, c)


def normalize_seed(seed) -> int:
    return int(seed) & _SEED_MASK


@dataclass(frozen=True)
class RngStream:
    """Counter context of one random draw: (seed, stage, step, site)."""

    seed: int
    stage: str = "gibbs"
    step: int = 0
    site: int = 0

    def __post_init__(self):
        if self.stage not in _STAGES:
            raise ValueError(f"unknown stage {self.stage!r}; expected one of {sorted(_STAGES)}")
        object.__setattr__(self, "seed", normalize_seed(self.seed))

    @property
    def stage_id(self) -> int:
        return _STAGES[self.stage]


def uniform_draw(stream: RngStream) -> float:
    return float(_kernels.uniform(np.uint64(stream.seed), stream.stage_id, stream.step,
                                  stream.site))


def uniform_draws(seed: int, stage: str, step: int, n: int) -> np.ndarray:
    """Uniforms for sites 0..n-1 at one (seed, stage, step)."""
    return _kernels.uniform_block(np.uint64(normalize_seed(seed)), _STAGES[stage], step, n)
