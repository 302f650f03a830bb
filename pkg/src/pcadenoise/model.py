"""Prior/posterior energies, the shared per-site score kernel and annealing.

Two energy views coexist here and differ only by how neighbour pairs are
counted:

* ``prior_energy`` reports ``H(x) = sum_i sum_{j~i} V(x_j, x_i)``, which visits
  every unordered neighbour pair twice.
* The samplers use the local characteristics
  ``E_i(s) = 2*beta*J*n_i(s) - (lum(g_i) - lum(s))**2 / (2*sigma**2)``.
  The Gibbs field with exactly these conditionals is
  ``exp(-beta * H(x) / 2 - data(x))``; :func:`log_posterior_weight` evaluates
  it and is what the exact-enumeration checks compare against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import LevelImage, Neighborhood, check_same_lattice, from_linear, level_luminances


@dataclass(frozen=True)
class PriorParams:
    coupling: float = 1.0 / 3.0
    neighborhood: Neighborhood = Neighborhood.MOORE8

    def __post_init__(self):
        if not self.coupling > 0:
            raise ValueError(f"coupling J must be positive, got {self.coupling}")


@dataclass(frozen=True)
class NoiseModel:
    sigma: float = 0.25
    mean: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.mean != 0.0:
            raise ValueError("only zero-mean noise is supported")


@dataclass(frozen=True)
class AnnealSchedule:
    """Piecewise-constant inverse temperature ``beta0 + increment * (t // period)``."""

    beta0: float = 1.25
    increment: float = 0.25
    period: int = 250
    total_steps: int = 1000

    def __post_init__(self):
        if not self.beta0 > 0:
            raise ValueError(f"beta0 must be positive, got {self.beta0}")
        if self.increment < 0:
            raise ValueError(f"increment must be nonnegative, got {self.increment}")
        if self.period < 1:
            raise ValueError(f"period must be a positive integer, got {self.period}")
        if self.total_steps < 0:
            raise ValueError(f"total_steps must be nonnegative, got {self.total_steps}")

    def beta_at(self, t: int) -> float:
        return beta_at(self, t)

    def betas(self) -> np.ndarray:
        return np.array([beta_at(self, t) for t in range(self.total_steps)])


@dataclass(frozen=True)
class PcaParams:
    """Lazy-PCA settings.

    ``inertia`` and ``exponent`` define the per-site cost
    ``q * |x_i - w_i| ** p`` (luminance units, ``0 ** 0 = 0``), so ``p = 0``
    charges ``q`` for every site that changes level.

    By default each site draws from ``softmax(E_i(s) - beta*q*cost)`` with
    the same exponent ``E_i`` as the Gibbs conditional. The pair Hamiltonian
    then counts the interaction and data field once per argument, so the
    stationary law approaches the *squared* posterior as ``q`` grows (same
    mode, sharper). ``balanced=True`` halves ``E_i``; ``H~(x, x)`` then equals
    the posterior energy and the stationary law approaches the posterior
    itself. The two are reparametrisations of each other: balanced at
    ``(beta, sigma, q)`` is the default kernel at ``(beta/2, sigma*sqrt(2), 2q)``.
    """

    inertia: float = 0.51
    exponent: float = 0.0
    balanced: bool = False

    def __post_init__(self):
        if self.inertia < 0:
            raise ValueError(f"inertia q must be nonnegative, got {self.inertia}")
        if self.exponent < 0:
            raise ValueError(f"norm exponent p must be nonnegative, got {self.exponent}")

    def cost_table(self, levels: int) -> np.ndarray:
        """(levels, levels) table of ``q * |lum(a) - lum(s)| ** p`` with 0**0 = 0."""
        lum = level_luminances(levels)
        diff = np.abs(lum[:, None] - lum[None, :])
        if self.exponent == 0:
            table = (diff != 0).astype(float)
        else:
            table = diff ** self.exponent
        return self.inertia * table

    @property
    def field_scale(self) -> float:
        return 0.5 if self.balanced else 1.0


def beta_at(schedule: AnnealSchedule, t: int) -> float:
    if not 0 <= t < schedule.total_steps:
        raise IndexError(f"step {t} outside schedule of {schedule.total_steps} steps")
    return schedule.beta0 + schedule.increment * (t // schedule.period)


def pair_potential(z: int, w: int, coupling: float) -> float:
    return -coupling if z == w else coupling


def data_table(levels: int, noise: NoiseModel) -> np.ndarray:
    """``table[g, s] = (lum(g) - lum(s))**2 / (2 sigma**2)``."""
    lum = level_luminances(levels)
    return (lum[:, None] - lum[None, :]) ** 2 / (2.0 * noise.sigma ** 2)


def prior_energy(x: LevelImage, params: PriorParams) -> float:
    return float(_kernels.prior_energy_flat(x.data, x.height, x.width, params.coupling))


def data_energy(x: LevelImage, g: LevelImage, noise: NoiseModel) -> float:
    """``sum_i (lum(g_i) - lum(x_i))**2 / (2 sigma**2)``; not scaled by beta."""
    check_same_lattice(x, g)
    return float(_kernels.data_energy_flat(x.data, g.data, data_table(x.levels, noise)))


def posterior_energy(x: LevelImage, g: LevelImage, prior: PriorParams,
                     noise: NoiseModel, beta: float) -> float:
    """``H(x) + data(x, g) / beta``."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return prior_energy(x, prior) + data_energy(x, g, noise) / beta


def log_posterior_weight(x: LevelImage, g: LevelImage, prior: PriorParams,
                         noise: NoiseModel, beta: float) -> float:
    """Unnormalised log-probability of ``x`` under the field the samplers target."""
    return -0.5 * beta * prior_energy(x, prior) - data_energy(x, g, noise)


def local_site_scores(x: LevelImage, g: LevelImage, site, prior: PriorParams,
                      noise: NoiseModel, beta: float) -> np.ndarray:
    """Exponents ``E_i(s)`` for every level ``s`` at ``site``.

    ``site`` is a linear index or an ``(r, c)`` tuple.
    """
    check_same_lattice(x, g)
    r, c = from_linear(site, x.height) if isinstance(site, (int, np.integer)) else site
    if not (0 <= r < x.height and 0 <= c < x.width):
        raise IndexError(f"site {site} outside a {x.width}x{x.height} image")
    out = np.empty(x.levels)
    _kernels.site_scores(x.data, g.data, x.height, x.width, r, c, x.levels,
                         2.0 * beta * prior.coupling, data_table(x.levels, noise), True, out)
    return out


def softmax(scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    w = np.exp(scores - scores.max())
    return w / w.sum()


def log_sum_exp(values) -> float:
    values = np.asarray(values, dtype=float)
    m = values.max()
    return float(m + math.log(np.exp(values - m).sum()))
