"""Exact enumeration on tiny lattices, used as ground truth by the tests.

Everything here is plain numpy over an explicit list of neighbour pairs and is
deliberately independent of the compiled sampler kernels.

State ``k`` is the configuration with ``x_i = (k // levels**i) % levels`` where
``i`` is the column-major site index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .core import LevelImage, from_linear, level_luminances, neighbors, to_linear
from .model import NoiseModel, PcaParams, PriorParams

MAX_SITES = 12
MAX_STATES = 2 ** 18
MAX_MATRIX_STATES = 4096


class InstanceTooLarge(ValueError):
    pass


class AsymmetricPairHamiltonian(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SmallInstance:
    g: LevelImage
    prior: PriorParams = PriorParams()
    noise: NoiseModel = NoiseModel()
    beta: float = 1.0
    pca: Optional[PcaParams] = None

    def __post_init__(self):
        if self.g.n_sites > MAX_SITES:
            raise InstanceTooLarge(f"{self.g.n_sites} sites exceeds {MAX_SITES}")
        if self.n_states > MAX_STATES:
            raise InstanceTooLarge(f"{self.n_states} states exceeds {MAX_STATES}")

    @property
    def n_sites(self) -> int:
        return self.g.n_sites

    @property
    def levels(self) -> int:
        return self.g.levels

    @property
    def n_states(self) -> int:
        return self.g.levels ** self.g.n_sites


def all_states(levels: int, n_sites: int) -> np.ndarray:
    codes = np.arange(levels ** n_sites)
    return (codes[:, None] // levels ** np.arange(n_sites)[None, :]) % levels


def state_code(x: LevelImage) -> int:
    return int(np.sum(x.data.astype(np.int64) * x.levels ** np.arange(x.n_sites)))


def neighbor_lists(width: int, height: int) -> List[List[int]]:
    out = []
    for i in range(width * height):
        site = from_linear(i, height)
        out.append([to_linear(s, height) for s in neighbors((width, height), site)])
    return out


def undirected_pairs(width: int, height: int) -> List[Tuple[int, int]]:
    return [(i, j) for i, nb in enumerate(neighbor_lists(width, height)) for j in nb if i < j]


def _data_costs(inst: SmallInstance) -> np.ndarray:
    """(n_sites, levels) array of (lum(g_i) - lum(s))**2 / (2 sigma**2)."""
    lum = level_luminances(inst.levels)
    gl = lum[inst.g.data.astype(int)]
    return (gl[:, None] - lum[None, :]) ** 2 / (2.0 * inst.noise.sigma ** 2)


def log_posterior_weights(inst: SmallInstance) -> np.ndarray:
    """``2 beta J * (#agreeing neighbour pairs) - data`` for every state."""
    states = all_states(inst.levels, inst.n_sites)
    agree = np.zeros(len(states))
    for i, j in undirected_pairs(inst.g.width, inst.g.height):
        agree += states[:, i] == states[:, j]
    dc = _data_costs(inst)
    data = dc[np.arange(inst.n_sites)[None, :], states].sum(axis=1)
    return 2.0 * inst.beta * inst.prior.coupling * agree - data


def _normalize_log(logw: np.ndarray) -> np.ndarray:
    w = np.exp(logw - logw.max())
    return w / w.sum()


def enumerate_posterior(inst: SmallInstance) -> np.ndarray:
    return _normalize_log(log_posterior_weights(inst))


def _require_matrix_size(inst):
    if inst.n_states > MAX_MATRIX_STATES:
        raise InstanceTooLarge(
            f"{inst.n_states} states too many for a dense transition matrix")


def _site_log_probs(inst: SmallInstance, pca: Optional[PcaParams]) -> np.ndarray:
    """(n_states, n_sites, levels) log-probabilities of each site's next level."""
    states = all_states(inst.levels, inst.n_sites)
    nbrs = neighbor_lists(inst.g.width, inst.g.height)
    levels = np.arange(inst.levels)
    scores = np.empty((len(states), inst.n_sites, inst.levels))
    dc = _data_costs(inst)
    scale = 1.0 if pca is None else pca.field_scale
    for i, nb in enumerate(nbrs):
        counts = np.zeros((len(states), inst.levels))
        for j in nb:
            counts += states[:, j][:, None] == levels[None, :]
        scores[:, i, :] = scale * (2.0 * inst.beta * inst.prior.coupling * counts - dc[i][None, :])
        if pca is not None:
            scores[:, i, :] -= inst.beta * pca.cost_table(inst.levels)[states[:, i]]
    m = scores.max(axis=2, keepdims=True)
    return scores - (m + np.log(np.exp(scores - m).sum(axis=2, keepdims=True)))


def gibbs_site_kernel(inst: SmallInstance, site: int) -> np.ndarray:
    """Transition matrix of resampling one site from its conditional."""
    _require_matrix_size(inst)
    states = all_states(inst.levels, inst.n_sites)
    logp = _site_log_probs(inst, None)[:, site, :]
    n = len(states)
    P = np.zeros((n, n))
    stride = inst.levels ** site
    base = np.arange(n) - states[:, site] * stride
    for s in range(inst.levels):
        P[np.arange(n), base + s * stride] += np.exp(logp[:, s])
    return P


def gibbs_sweep_kernel(inst: SmallInstance) -> np.ndarray:
    """Product of the single-site kernels in column-major order."""
    P = np.eye(inst.n_states)
    for i in range(inst.n_sites):
        P = P @ gibbs_site_kernel(inst, i)
    return P


def _pca_params(inst: SmallInstance) -> PcaParams:
    if inst.pca is None:
        raise ValueError("instance has no PcaParams")
    return inst.pca


def pca_log_transition_matrix(inst: SmallInstance) -> np.ndarray:
    _require_matrix_size(inst)
    states = all_states(inst.levels, inst.n_sites)
    logp = _site_log_probs(inst, _pca_params(inst))
    out = np.zeros((len(states), len(states)))
    for i in range(inst.n_sites):
        out += logp[:, i, :][:, states[:, i]]
    return out


def pca_transition_matrix(inst: SmallInstance) -> np.ndarray:
    """Row-stochastic ``P(x, w) = prod_i p_i(w_i | x)``."""
    return np.exp(pca_log_transition_matrix(inst))


def pair_hamiltonian(inst: SmallInstance) -> np.ndarray:
    """``beta * H~(x, w)`` for all state pairs.

    The data term appears once per argument so that the matrix is symmetric
    whenever the neighbourhood relation is; ``field_scale`` weights both the
    interaction and the data term.
    """
    _require_matrix_size(inst)
    pca = _pca_params(inst)
    states = all_states(inst.levels, inst.n_sites)
    nbrs = neighbor_lists(inst.g.width, inst.g.height)
    dc = _data_costs(inst)
    sites = np.arange(inst.n_sites)
    data = dc[sites[None, :], states].sum(axis=1)
    inter = np.zeros((len(states), len(states)))
    inertia = np.zeros_like(inter)
    cost = pca.cost_table(inst.levels)
    for i, nb in enumerate(nbrs):
        for j in nb:
            inter += states[:, j][:, None] == states[:, i][None, :]
        inertia += cost[states[:, i][:, None], states[:, i][None, :]]
    scale = pca.field_scale
    return (scale * (-2.0 * inst.beta * inst.prior.coupling * inter
                     + data[:, None] + data[None, :])
            + inst.beta * inertia)


def pca_stationary_closed_form(inst: SmallInstance, atol: float = 1e-12) -> np.ndarray:
    """``Z_x / Z`` with ``Z_x = sum_w exp(-beta H~(x, w))``.

    Raises AsymmetricPairHamiltonian if ``H~(x, w) != H~(w, x)``.
    """
    bh = pair_hamiltonian(inst)
    asym = np.max(np.abs(bh - bh.T))
    if asym > atol:
        raise AsymmetricPairHamiltonian(f"pair Hamiltonian asymmetric by {asym:.3e}")
    m = (-bh).max()
    log_zx = m + np.log(np.exp(-bh - m).sum(axis=1))
    return _normalize_log(log_zx)


def stationary_power_iteration(P: np.ndarray, tol: float = 1e-12,
                               max_iter: int = 100_000) -> np.ndarray:
    """Left fixed point of a row-stochastic matrix by repeated ``pi <- pi P``."""
    pi = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(max_iter):
        nxt = pi @ P
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() <= tol:
            return nxt
        pi = nxt
    raise RuntimeError(f"power iteration did not reach residual {tol} in {max_iter} steps")


def detailed_balance_residual(pi: np.ndarray, P: np.ndarray) -> float:
    flow = pi[:, None] * P
    return float(np.max(np.abs(flow - flow.T)))


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def dump_distribution_csv(path, inst: SmallInstance, **columns):
    """Write one row per state: code, levels per site, then each named column."""
    states = all_states(inst.levels, inst.n_sites)
    names = list(columns)
    with open(path, "w") as fh:
        fh.write(",".join(["code"] + [f"x{i}" for i in range(inst.n_sites)] + names) + "\n")
        for k, st in enumerate(states):
            vals = [repr(float(columns[n][k])) for n in names]
            fh.write(",".join([str(k)] + [str(v) for v in st] + vals) + "\n")
