import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcadenoise import _kernels
from pcadenoise.core import LevelImage
from pcadenoise.model import NoiseModel, PcaParams, PriorParams, log_posterior_weight
from pcadenoise.oracle import (AsymmetricPairHamiltonian, InstanceTooLarge, SmallInstance,
                               all_states, detailed_balance_residual, dump_distribution_csv,
                               enumerate_posterior, gibbs_site_kernel, gibbs_sweep_kernel,
                               log_posterior_weights, pair_hamiltonian, pca_stationary_closed_form,
                               pca_transition_matrix, stationary_power_iteration, state_code,
                               tv_distance, undirected_pairs)

from conftest import pca_kernel_args, random_image

J = 1 / 3


def small_instance(seed, q=0.51, balanced=True):
    rng = np.random.default_rng(seed)
    w, h = int(rng.integers(1, 4)), int(rng.integers(1, 3))
    levels = int(rng.integers(2, 4))
    g = random_image(rng, w, h, levels)
    return SmallInstance(g, PriorParams(J), NoiseModel(float(rng.uniform(0.15, 0.6))),
                         float(rng.uniform(0.5, 2.0)), PcaParams(q, balanced=balanced))


def test_tv_examples():
    assert tv_distance([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert tv_distance([1, 0], [0, 1]) == 1.0
    assert tv_distance([0.5, 0.5], [0.9, 0.1]) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        tv_distance([1.0], [0.5, 0.5])


def test_flat_limit():
    g = LevelImage.from_array(np.array([[0, 1], [1, 0]]), 2)
    p = enumerate_posterior(SmallInstance(g, PriorParams(J), NoiseModel(1e6), beta=1e-12))
    assert np.allclose(p, 1 / 16, atol=1e-9)


def test_single_site_two_point_distribution():
    g = LevelImage.constant(1, 1, 2, 1)
    p = enumerate_posterior(SmallInstance(g, PriorParams(J), NoiseModel(0.25)))
    w0, w1 = math.exp(-8.0), 1.0
    assert np.allclose(p, [w0 / (w0 + w1), w1 / (w0 + w1)], atol=1e-15)


def test_posterior_normalized_and_matches_model(reference_instance):
    inst = reference_instance
    p = enumerate_posterior(inst)
    assert abs(p.sum() - 1) <= 1e-14
    logw = log_posterior_weights(inst)
    for code in (0, 5, 200, 511):
        x = LevelImage(3, 3, 2, all_states(2, 9)[code])
        assert state_code(x) == code
        expected = log_posterior_weight(x, inst.g, inst.prior, inst.noise, inst.beta)
        assert logw[code] - logw[0] == pytest.approx(
            expected - log_posterior_weight(LevelImage(3, 3, 2, all_states(2, 9)[0]), inst.g,
                                            inst.prior, inst.noise, inst.beta), abs=1e-12)


def test_pair_count():
    assert len(undirected_pairs(3, 3)) == 20
    assert len(undirected_pairs(2, 2)) == 6


def test_gibbs_kernels_preserve_posterior(reference_instance):
    inst = reference_instance
    pi = enumerate_posterior(inst)
    for i in range(inst.n_sites):
        P = gibbs_site_kernel(inst, i)
        assert np.allclose(P.sum(axis=1), 1, atol=1e-14)
        assert np.max(np.abs(pi @ P - pi)) <= 1e-12
        assert detailed_balance_residual(pi, P) <= 1e-12
    assert np.max(np.abs(pi @ gibbs_sweep_kernel(inst) - pi)) <= 1e-12


def test_pca_matrix_stochastic_and_frozen_limit(reference_instance):
    P = pca_transition_matrix(reference_instance)
    assert np.allclose(P.sum(axis=1), 1, atol=1e-13)
    frozen = SmallInstance(reference_instance.g, PriorParams(J), NoiseModel(0.25), 1.0,
                           PcaParams(50.0))
    Pf = pca_transition_matrix(frozen)
    assert np.max(Pf - np.diag(np.diag(Pf))) < 1e-6
    assert (Pf.sum() - np.trace(Pf)) / Pf.shape[0] < 1e-6


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("balanced", [True, False])
def test_closed_form_is_stationary(seed, balanced):
    inst = small_instance(seed, balanced=balanced)
    bh = pair_hamiltonian(inst)
    assert np.max(np.abs(bh - bh.T)) <= 1e-12
    pi = pca_stationary_closed_form(inst)
    P = pca_transition_matrix(inst)
    assert tv_distance(pi, stationary_power_iteration(P)) <= 1e-10
    assert detailed_balance_residual(pi, P) <= 1e-12


def test_transition_matrix_from_pair_hamiltonian(reference_instance):
    bh = pair_hamiltonian(reference_instance)
    expected = np.exp(-bh - np.log(np.exp(-bh).sum(axis=1, keepdims=True)))
    assert np.allclose(pca_transition_matrix(reference_instance), expected, atol=1e-14)


def test_literal_kernel_targets_squared_posterior():
    g = LevelImage.from_array(np.array([[0, 1], [1, 1]]), 2)
    prior, noise = PriorParams(J), NoiseModel(0.4)
    post = enumerate_posterior(SmallInstance(g, prior, noise))
    sq = post ** 2 / (post ** 2).sum()
    lit = pca_stationary_closed_form(SmallInstance(g, prior, noise, 1.0, PcaParams(12.0)))
    bal = pca_stationary_closed_form(
        SmallInstance(g, prior, noise, 1.0, PcaParams(12.0, balanced=True)))
    assert tv_distance(lit, sq) < 1e-3
    assert tv_distance(bal, post) < 1e-3
    assert tv_distance(lit, post) > 0.05


def test_one_step_frequencies_match_matrix(reference_instance, checker_g):
    inst = reference_instance
    P = pca_transition_matrix(inst)
    x0 = np.array([1, 1, 0, 0, 1, 0, 1, 1, 0], dtype=np.int64)
    row = P[state_code(LevelImage(3, 3, 2, x0))]
    n = 1_000_000
    c2b, dt, inert = pca_kernel_args(inst)
    counts = _kernels.pca_one_step_frequencies(x0, checker_g.data, 3, 3, 2, c2b, dt, inert,
                                               np.uint64(2024), n)
    freq = counts / n
    se = np.sqrt(row * (1 - row) / n)
    mask = row > 1e-5
    z = np.abs(freq - row)[mask] / se[mask]
    # 3-sigma per cell; with hundreds of cells a handful may exceed it by chance
    assert np.mean(z <= 3) >= 0.99
    assert z.max() <= 5
    assert np.all(freq[~mask] <= 1e-4)


def test_size_guards():
    with pytest.raises(InstanceTooLarge):
        SmallInstance(LevelImage.constant(4, 4, 2, 0))
    big = SmallInstance(LevelImage.constant(3, 3, 3, 0), pca=PcaParams())
    with pytest.raises(InstanceTooLarge):
        pca_transition_matrix(big)


def test_asymmetry_detected(reference_instance, monkeypatch):
    import pcadenoise.oracle as oracle
    orig = oracle.pair_hamiltonian
    monkeypatch.setattr(oracle, "pair_hamiltonian",
                        lambda inst: orig(inst) + np.triu(np.ones((512, 512)), 1) * 1e-3)
    with pytest.raises(AsymmetricPairHamiltonian):
        oracle.pca_stationary_closed_form(reference_instance)


def test_dump_csv(tmp_path, reference_instance):
    p = enumerate_posterior(reference_instance)
    path = tmp_path / "d.csv"
    dump_distribution_csv(path, reference_instance, posterior=p)
    lines = path.read_text().splitlines()
    assert lines[0] == "code,x0,x1,x2,x3,x4,x5,x6,x7,x8,posterior"
    assert len(lines) == 513
    assert float(lines[7].split(",")[-1]) == p[6]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 3.0))
def test_detailed_balance_property(seed, q):
    inst = small_instance(seed, q=q)
    pi = pca_stationary_closed_form(inst)
    assert detailed_balance_residual(pi, pca_transition_matrix(inst)) <= 1e-12
