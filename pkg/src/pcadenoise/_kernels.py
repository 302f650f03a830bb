"""Compiled inner loops shared by the samplers, synthesis and tests.

Images are handled here as flat column-major arrays (``i = c * height + r``).
Every random draw is a pure function of ``(seed, stage, step, site)`` through
Philox4x32-10, so the result of a loop never depends on the order in which
sites are visited by different workers.
"""
import numpy as np
from numba import njit

_MASK32 = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_SHIFT32 = np.uint64(32)
_TWO_POW_26 = np.uint64(67108864)
_INV_TWO_POW_53 = 1.0 / 9007199254740992.0

STAGE_INIT = 1
STAGE_MRF = 2
STAGE_NOISE = 3
STAGE_GIBBS = 4
STAGE_PCA = 5


@njit(nogil=True, cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32 with 10 rounds on 32-bit words held in uint64 registers."""
    c0 = np.uint64(c0) & _MASK32
    c1 = np.uint64(c1) & _MASK32
    c2 = np.uint64(c2) & _MASK32
    c3 = np.uint64(c3) & _MASK32
    k0 = np.uint64(k0) & _MASK32
    k1 = np.uint64(k1) & _MASK32
    for rnd in range(10):
        if rnd > 0:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        n0 = ((p1 >> _SHIFT32) ^ c1 ^ k0) & _MASK32
        n1 = p1 & _MASK32
        n2 = ((p0 >> _SHIFT32) ^ c3 ^ k1) & _MASK32
        n3 = p0 & _MASK32
        c0, c1, c2, c3 = n0, n1, n2, n3
    return c0, c1, c2, c3


@njit(nogil=True, cache=True)
def _to_unit(a, b):
    return np.float64((a >> np.uint64(5)) * _TWO_POW_26 + (b >> np.uint64(6))) * _INV_TWO_POW_53


@njit(nogil=True, cache=True)
def uniform_pair(seed, stage, step, site):
    """Two independent 53-bit uniforms in [0, 1) for one counter value."""
    s = np.uint64(seed)
    site_u = np.uint64(site)
    a, b, c, d = philox4x32(
        site_u & _MASK32, site_u >> _SHIFT32, np.uint64(step), np.uint64(stage),
        s & _MASK32, s >> _SHIFT32,
    )
    return _to_unit(a, b), _to_unit(c, d)


@njit(nogil=True, cache=True)
def uniform(seed, stage, step, site):
    return uniform_pair(seed, stage, step, site)[0]


@njit(nogil=True, cache=True)
def uniform_block(seed, stage, step, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = uniform(seed, stage, step, i)
    return out


@njit(nogil=True, cache=True)
def normal_block(seed, stage, step, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = standard_normal(seed, stage, step, i)
    return out


@njit(nogil=True, cache=True)
def standard_normal(seed, stage, step, site):
    # Box-Muller, cosine branch; 1 - u lies in (0, 1] so the log is finite
    u1, u2 = uniform_pair(seed, stage, step, site)
    return np.sqrt(-2.0 * np.log(1.0 - u1)) * np.cos(2.0 * np.pi * u2)


@njit(nogil=True, cache=True)
def draw_from_scores(scores, n_levels, u):
    """Inverse-CDF draw from softmax(scores[:n_levels]); overwrites scores."""
    m = scores[0]
    for s in range(1, n_levels):
        if scores[s] > m:
            m = scores[s]
    total = 0.0
    for s in range(n_levels):
        scores[s] = np.exp(scores[s] - m)
        total += scores[s]
    target = u * total
    cum = 0.0
    for s in range(n_levels):
        cum += scores[s]
        if target < cum:
            return s
    for s in range(n_levels - 1, -1, -1):
        if scores[s] > 0.0:
            return s
    return n_levels - 1


@njit(nogil=True, cache=True)
def site_scores(x, g, height, width, r, c, n_levels, coupling2b,
                data_table, use_data, out):
    """Write E(s) = 2*beta*J*n(s) - D(g_i, s) for every level into ``out``."""
    for s in range(n_levels):
        out[s] = 0.0
    for dc in range(-1, 2):
        cc = c + dc
        if cc < 0 or cc >= width:
            continue
        for dr in range(-1, 2):
            rr = r + dr
            if rr < 0 or rr >= height or (dr == 0 and dc == 0):
                continue
            out[x[cc * height + rr]] += coupling2b
    if use_data:
        gi = g[c * height + r]
        for s in range(n_levels):
            out[s] -= data_table[gi, s]


@njit(nogil=True, cache=True)
def gibbs_sweep_inplace(x, g, height, width, n_levels, coupling2b, data_table,
                        use_data, seed, stage, step):
    """One systematic column-major sweep; returns the number of changed sites."""
    scores = np.empty(n_levels)
    changed = 0
    for c in range(width):
        for r in range(height):
            i = c * height + r
            site_scores(x, g, height, width, r, c, n_levels, coupling2b,
                        data_table, use_data, scores)
            u = uniform(seed, stage, step, i)
            new = draw_from_scores(scores, n_levels, u)
            if new != x[i]:
                changed += 1
                x[i] = new
    return changed


@njit(nogil=True, cache=True)
def pca_update_range(x_old, x_new, g, height, width, n_levels, coupling2b,
                     data_table, inertia_table, seed, step, start, stop):
    """Lazy-PCA update of linear sites [start, stop) into ``x_new``.

    ``inertia_table[a, s]`` already carries the beta factor.
    """
    scores = np.empty(n_levels)
    changed = 0
    for i in range(start, stop):
        c = i // height
        r = i - c * height
        site_scores(x_old, g, height, width, r, c, n_levels, coupling2b,
                    data_table, True, scores)
        cur = x_old[i]
        for s in range(n_levels):
            scores[s] -= inertia_table[cur, s]
        u = uniform(seed, STAGE_PCA, step, i)
        new = draw_from_scores(scores, n_levels, u)
        x_new[i] = new
        if new != cur:
            changed += 1
    return changed


@njit(nogil=True, cache=True)
def degrade_range(x, out, lum, sigma, seed, start, stop):
    n_levels = lum.shape[0]
    top = n_levels - 1
    for i in range(start, stop):
        v = lum[x[i]] + sigma * standard_normal(seed, STAGE_NOISE, 0, i)
        if v < 0.0:
            v = 0.0
        elif v > 1.0:
            v = 1.0
        # nearest level, ties toward the lower index
        k = int(np.floor(v * top))
        if k >= top:
            k = top
        elif lum[k + 1] - v < v - lum[k]:
            k += 1
        out[i] = k


@njit(nogil=True, cache=True)
def uniform_levels(n_sites, n_levels, seed, out):
    for i in range(n_sites):
        k = int(uniform(seed, STAGE_INIT, 0, i) * n_levels)
        out[i] = min(k, n_levels - 1)


@njit(nogil=True, cache=True)
def prior_energy_flat(x, height, width, coupling):
    """Sum over sites of sum over Moore neighbours of V(x_j, x_i)."""
    total = 0.0
    for c in range(width):
        for r in range(height):
            xi = x[c * height + r]
            for dc in range(-1, 2):
                cc = c + dc
                if cc < 0 or cc >= width:
                    continue
                for dr in range(-1, 2):
                    rr = r + dr
                    if rr < 0 or rr >= height or (dr == 0 and dc == 0):
                        continue
                    if x[cc * height + rr] == xi:
                        total -= coupling
                    else:
                        total += coupling
    return total


@njit(nogil=True, cache=True)
def data_energy_flat(x, g, data_table):
    total = 0.0
    for i in range(x.shape[0]):
        total += data_table[g[i], x[i]]
    return total


@njit(nogil=True, cache=True)
def _state_code(x, n_levels):
    code = 0
    mult = 1
    for i in range(x.shape[0]):
        code += x[i] * mult
        mult *= n_levels
    return code


@njit(cache=True)
def gibbs_chain_histogram(x0, g, height, width, n_levels, coupling2b,
                          data_table, seed, n_sweeps, burn_in):
    """Visit counts of a fixed-beta Gibbs chain (state code = sum x_i * l**i)."""
    x = x0.copy()
    counts = np.zeros(n_levels ** x.shape[0], dtype=np.int64)
    for t in range(burn_in + n_sweeps):
        gibbs_sweep_inplace(x, g, height, width, n_levels, coupling2b,
                            data_table, True, seed, STAGE_GIBBS, t)
        if t >= burn_in:
            counts[_state_code(x, n_levels)] += 1
    return counts


@njit(cache=True)
def pca_chain_histogram(x0, g, height, width, n_levels, coupling2b,
                        data_table, inertia_table, seed, n_steps, burn_in):
    n = x0.shape[0]
    x = x0.copy()
    y = np.empty_like(x)
    counts = np.zeros(n_levels ** n, dtype=np.int64)
    for t in range(burn_in + n_steps):
        pca_update_range(x, y, g, height, width, n_levels, coupling2b,
                         data_table, inertia_table, seed, t, 0, n)
        x, y = y, x
        if t >= burn_in:
            counts[_state_code(x, n_levels)] += 1
    return counts


@njit(cache=True)
def pca_one_step_frequencies(x0, g, height, width, n_levels, coupling2b,
                             data_table, inertia_table, seed, n_trials):
    """Counts of the successor state of ``x0`` over independent step indices."""
    n = x0.shape[0]
    y = np.empty_like(x0)
    counts = np.zeros(n_levels ** n, dtype=np.int64)
    for t in range(n_trials):
        pca_update_range(x0, y, g, height, width, n_levels, coupling2b,
                         data_table, inertia_table, seed, t, 0, n)
        counts[_state_code(y, n_levels)] += 1
    return counts
