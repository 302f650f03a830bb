"""Acceptance criteria A1-A9, one PASS/FAIL line each.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdict lines are
printed even when pytest captures output.
"""
import json
import math
import os
import time

import numpy as np
import pytest

from pcadenoise import _kernels
from pcadenoise.bench import run_benchmark
from pcadenoise.cli import main
from pcadenoise.core import LevelImage
from pcadenoise.metrics import evaluate, mse, psnr, ssim
from pcadenoise.model import AnnealSchedule, NoiseModel, PcaParams, PriorParams, data_table
from pcadenoise.oracle import (SmallInstance, detailed_balance_residual, enumerate_posterior,
                               gibbs_site_kernel, pca_stationary_closed_form,
                               pca_transition_matrix, stationary_power_iteration, tv_distance)
from pcadenoise.samplers import run_chain
from pcadenoise.synthesis import DEFAULT_GENERATION_SCHEDULE, MrfGenSpec, degrade, generate_mrf

from conftest import CHECKER

J = 1 / 3
PRIOR = PriorParams(J)


@pytest.fixture
def verdict(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n{name} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def reference():
    return SmallInstance(LevelImage.from_array(CHECKER, 2), PRIOR, NoiseModel(0.25), 1.0,
                         PcaParams(0.51))


def test_a1_gibbs_oracle(verdict):
    t0 = time.perf_counter()
    inst = reference()
    pi = enumerate_posterior(inst)
    residual = max(np.max(np.abs(pi @ gibbs_site_kernel(inst, i) - pi))
                   for i in range(inst.n_sites))
    g = inst.g.data
    counts = _kernels.gibbs_chain_histogram(g.copy(), g, 3, 3, 2, 2 * J, data_table(2, inst.noise),
                                            np.uint64(1), 1_000_000, 1000)
    tv = tv_distance(counts / counts.sum(), pi)
    elapsed = time.perf_counter() - t0
    verdict("A1", residual <= 1e-12 and tv <= 0.02 and elapsed < 120,
            f"invariance residual {residual:.2e} (<=1e-12), TV over 1e6 sweeps {tv:.4f} (<=0.02), "
            f"{elapsed:.1f}s")


def a2_instances():
    g2 = LevelImage.from_array(np.array([[0, 2, 1], [1, 1, 2]]), 3)
    g3 = LevelImage.from_array(np.array([[1, 1, 0], [0, 1, 0], [1, 0, 0]]), 2)
    return [
        reference(),
        SmallInstance(g2, PRIOR, NoiseModel(0.3), 1.5, PcaParams(0.51)),
        SmallInstance(g3, PRIOR, NoiseModel(0.4), 2.0, PcaParams(1.0)),
        SmallInstance(g3, PriorParams(0.5), NoiseModel(0.2), 0.8, PcaParams(0.51, balanced=True)),
    ]


def test_a2_pca_stationary(verdict):
    t0 = time.perf_counter()
    worst_tv = worst_db = 0.0
    for inst in a2_instances():
        P = pca_transition_matrix(inst)
        closed = pca_stationary_closed_form(inst)
        worst_tv = max(worst_tv, tv_distance(closed, stationary_power_iteration(P, tol=1e-14)))
        worst_db = max(worst_db, detailed_balance_residual(closed, P))
    elapsed = time.perf_counter() - t0
    verdict("A2", worst_tv <= 1e-10 and worst_db <= 1e-12 and elapsed < 60,
            f"4 instances, max TV closed form vs power iteration {worst_tv:.2e} (<=1e-10), "
            f"max detailed-balance residual {worst_db:.2e} (<=1e-12), {elapsed:.1f}s")


def a3_series(balanced):
    base = reference()
    post = enumerate_posterior(base)
    return [tv_distance(pca_stationary_closed_form(
        SmallInstance(base.g, base.prior, base.noise, base.beta, PcaParams(q, balanced=balanced))),
        post) for q in (0.5, 1.0, 2.0, 4.0)]


def test_a3_lazy_approximation(verdict):
    # judged on the default kernel; the balanced variant is reported alongside
    tvs = a3_series(PcaParams().balanced)
    other = a3_series(not PcaParams().balanced)
    monotone = all(b <= a for a, b in zip(tvs, tvs[1:]))
    fmt = lambda v: ", ".join(f"{t:.4f}" for t in v)
    verdict("A3", monotone and tvs[-1] < tvs[0],
            f"TV to posterior at q=0.5,1,2,4: {fmt(tvs)} "
            f"(balanced={not PcaParams().balanced} kernel: {fmt(other)})")


def test_a4_metrics(verdict):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(50):
        levels = int(rng.integers(2, 34))
        shape = tuple(int(v) for v in rng.integers(2, 20, 2))
        x = LevelImage.from_array(rng.integers(0, levels, shape), levels)
        y = LevelImage.from_array(rng.integers(0, levels, shape), levels)
        a, b = x.luminance().ravel().tolist(), y.luminance().ravel().tolist()
        n = len(a)
        m = sum((a[i] - b[i]) ** 2 for i in range(n)) / n
        ma, mb = sum(a) / n, sum(b) / n
        va = sum((v - ma) ** 2 for v in a) / n
        vb = sum((v - mb) ** 2 for v in b) / n
        cov = sum((a[i] - ma) * (b[i] - mb) for i in range(n)) / n
        s = ((2 * ma * mb + 1e-4) * (2 * cov + 9e-4)) / ((ma ** 2 + mb ** 2 + 1e-4) * (va + vb + 9e-4))
        worst = max(worst, abs(mse(x, y) - m), abs(ssim(x, y) - s))
        if m > 0 and max(a) > 0:
            worst = max(worst, abs(psnr(x, y) - 20 * math.log10(max(a) / math.sqrt(m))))
    x = LevelImage.from_array(rng.integers(0, 5, (8, 8)), 5)
    self_ssim = ssim(x, x)
    twenty = psnr(np.array([1.0, 0.5]), np.array([1.0, 0.5 + math.sqrt(0.02)]))
    ok = worst <= 1e-12 and self_ssim == pytest.approx(1.0, abs=1e-15) and \
        abs(twenty - 20.0) <= 1e-12
    verdict("A4", ok, f"max deviation from loop oracles {worst:.2e} over 50 pairs, "
                      f"ssim(x,x)={self_ssim:.15f}, psnr at mse 0.01 = {twenty:.12f} dB")


def denoise_corpus(levels, sigma, seeds, gen_schedule):
    noise = NoiseModel(sigma)
    rows = []
    for seed in seeds:
        x = generate_mrf(MrfGenSpec((64, 64), levels, J, gen_schedule, seed=seed))
        g = degrade(x, noise, 1000 + seed)
        noisy = evaluate(x, g)
        res = {}
        for method in ("gibbs", "pca"):
            final, _ = run_chain(g, g, PRIOR, noise, AnnealSchedule(), method, PcaParams(0.51),
                                 seed=2000 + seed)
            res[method] = evaluate(x, final)
        rows.append((seed, noisy, res))
    return rows


def test_a5_end_to_end(verdict):
    t0 = time.perf_counter()
    rows = denoise_corpus(5, 0.25, range(5), DEFAULT_GENERATION_SCHEDULE)
    failures = []
    lines = []
    for seed, noisy, res in rows:
        gs, pca = res["gibbs"], res["pca"]
        lines.append(f"img{seed}: noisy {noisy.psnr:.2f}/{noisy.ssim:.3f} "
                     f"GS {gs.psnr:.2f}/{gs.ssim:.3f} PCA {pca.psnr:.2f}/{pca.ssim:.3f}")
        for name, r in res.items():
            if r.psnr < noisy.psnr + 2:
                failures.append(f"img{seed} {name} PSNR gain {r.psnr - noisy.psnr:.2f} < 2 dB")
            if not r.ssim > noisy.ssim:
                failures.append(f"img{seed} {name} SSIM not improved")
            if not 22.7 - 4 <= r.psnr <= 24.6 + 4:
                failures.append(f"img{seed} {name} PSNR {r.psnr:.2f} outside [18.7, 28.6]")
            if not 0.77 - 0.12 <= r.ssim <= 0.85 + 0.12:
                failures.append(f"img{seed} {name} SSIM {r.ssim:.3f} outside [0.65, 0.97]")
        if abs(pca.psnr - gs.psnr) > 2:
            failures.append(f"img{seed} |PSNR_PCA - PSNR_GS| = {abs(pca.psnr - gs.psnr):.2f} > 2")
    elapsed = time.perf_counter() - t0
    if elapsed >= 300:
        failures.append(f"runtime {elapsed:.0f}s >= 300s")
    verdict("A5", not failures, "; ".join(failures or lines) + f"; {elapsed:.1f}s")


# With 33 levels the default generation schedule (beta0 = 0.4) stays in the
# disordered phase; starting at beta0 = 1.0 with +0.2 per 50 sweeps produces
# the domain structure the 5-level corpus has.
A6_GENERATION = AnnealSchedule(1.0, 0.2, 50, 400)


def test_a6_many_levels(verdict):
    rows = denoise_corpus(33, 0.10, range(5), A6_GENERATION)
    gains = [(seed, m, r.psnr - noisy.psnr) for seed, noisy, res in rows for m, r in res.items()]
    worst = min(gains, key=lambda t: t[2])
    detail = ", ".join(f"img{s} {m} +{g:.2f} dB" for s, m, g in gains)
    verdict("A6", worst[2] >= 1.0, f"PSNR gain over noisy (>=1 dB): {detail}")


def test_a7_thread_determinism(verdict, tmp_path):
    x, g = tmp_path / "x.pgm", tmp_path / "g.pgm"
    assert main(["generate", "--seed", "7", "--size", "64", "-o", str(x)]) == 0
    assert main(["degrade", "--seed", "8", "-i", str(x), "-o", str(g)]) == 0
    rng = np.random.default_rng(77)
    seeds = [int(s) for s in rng.integers(0, 2 ** 63, 10)]
    mismatched = []
    for seed in seeds:
        digests = set()
        for threads in (1, 2, 8):
            out = tmp_path / f"r_{threads}.pgm"
            assert main(["denoise", "--method", "pca", "--seed", str(seed), "--threads",
                         str(threads), "-i", str(g), "-o", str(out)]) == 0
            digests.add(out.read_bytes())
        if len(digests) != 1:
            mismatched.append(seed)
    verdict("A7", not mismatched,
            f"{len(seeds) - len(mismatched)}/{len(seeds)} seeds byte-identical at threads 1, 2, 8")


def test_a8_degradation_statistics(verdict):
    x = LevelImage.constant(256, 256, 5, 2)
    frac = float(np.mean(degrade(x, NoiseModel(0.25), 0).data == 2))
    target = math.erf(0.125 / (0.25 * math.sqrt(2)))
    verdict("A8", abs(frac - target) <= 0.01,
            f"unchanged fraction {frac:.4f} vs {target:.4f} (+-0.01), n=65536")


def test_a9_throughput(verdict, capsys):
    cores = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
    if (cores or 1) < 4:
        with capsys.disabled():
            print(f"\nA9 NOT EVALUATED: {cores} core(s) available, the criterion needs >= 4")
        pytest.skip(f"A9 needs >= 4 cores, machine has {cores}")
    report = run_benchmark(512, 512, 5, [1, 4], repeats=3)
    speedup = report["pca"][1]["speedup"]
    verdict("A9", speedup >= 2.0, f"pca_step 512x512 speedup at 4 threads {speedup:.2f} (>=2.0); "
                                  + json.dumps(report["pca"]))
