"""Command-line driver: generate, degrade, denoise, evaluate, bench.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 lineage mismatch.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, resolve, validate
from .io import (PgmError, export_8bit, file_sha256, load_levels, read_sidecar,
                 save_with_sidecar)
from .metrics import evaluate, report_json, table_rows
from .samplers import default_threads, run_chain, write_trace_csv
from .synthesis import degrade, generate_mrf

log = logging.getLogger("pcadenoise")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_LINEAGE = 4


class LineageError(RuntimeError):
    pass


def _schedule_dict(s):
    return {"beta0": s.beta0, "increment": s.increment, "period": s.period,
            "total_steps": s.total_steps}


def _origin(path) -> str:
    meta = read_sidecar(path)
    if meta and meta.get("provenance", {}).get("origin_sha256"):
        return meta["provenance"]["origin_sha256"]
    return file_sha256(path)


def _require(value, name):
    if value is None:
        raise ConfigError(f"missing required setting '{name}'")
    return value


def cmd_generate(cfg: RunConfig) -> int:
    out = _require(cfg.output, "output")
    img = generate_mrf(cfg.mrf_spec())
    save_with_sidecar(out, img, cfg.seed, {
        "kind": "mrf",
        "coupling": cfg.coupling,
        "generation_schedule": _schedule_dict(cfg.generation_schedule()),
        "origin_sha256": None,
    })
    log.info("wrote %s (%dx%d, %d levels)", out, img.width, img.height, img.levels)
    return EXIT_OK


def cmd_degrade(cfg: RunConfig) -> int:
    src = _require(cfg.input, "input")
    out = _require(cfg.output, "output")
    x = load_levels(src)
    g = degrade(x, cfg.noise(), cfg.seed, cfg.threads or default_threads())
    save_with_sidecar(out, g, cfg.seed, {
        "kind": "degraded",
        "sigma": cfg.sigma,
        "source_sha256": file_sha256(src),
        "origin_sha256": _origin(src),
    })
    log.info("wrote %s (sigma=%g)", out, cfg.sigma)
    return EXIT_OK


def cmd_denoise(cfg: RunConfig) -> int:
    src = _require(cfg.input, "input")
    out = Path(_require(cfg.output, "output"))
    threads = cfg.threads or default_threads()
    if cfg.method == "gibbs" and threads > 1:
        log.warning("the Gibbs sweep is sequential; --threads %d has no effect", threads)
    g = load_levels(src)
    pca = cfg.pca_params() if cfg.method == "pca" else None

    def checkpoint(step, img):
        save_with_sidecar(out.with_name(f"{out.stem}.step{step:06d}.pgm"), img, cfg.seed,
                          {"kind": "checkpoint", "step": step, "source_sha256": file_sha256(src)})

    final, trace = run_chain(g, g, cfg.prior(), cfg.noise(), cfg.schedule(), cfg.method, pca,
                             cfg.seed, threads if cfg.method == "pca" else 1,
                             cfg.checkpoint_every, checkpoint if cfg.checkpoint_every else None)
    provenance = {
        "kind": "restored",
        "method": cfg.method,
        "coupling": cfg.coupling,
        "sigma": cfg.sigma,
        "schedule": _schedule_dict(cfg.schedule()),
        "initial_state": "observation",
        "source_sha256": file_sha256(src),
        "origin_sha256": _origin(src),
    }
    if pca is not None:
        provenance.update(q=pca.inertia, p=pca.exponent, pca_kernel=cfg.pca_kernel)
    save_with_sidecar(out, final, cfg.seed, provenance)
    write_trace_csv(cfg.trace or out.with_suffix(".trace.csv"), trace)
    log.info("wrote %s after %d steps", out, len(trace))
    return EXIT_OK


def _check_lineage(original, restored, noisy):
    orig_sha = file_sha256(original)
    r_meta = read_sidecar(restored)
    if noisy is not None:
        n_meta = read_sidecar(noisy)
        if n_meta and n_meta["provenance"].get("origin_sha256") not in (None, orig_sha):
            raise LineageError(f"{noisy} was not derived from {original}")
        if r_meta and r_meta["provenance"].get("source_sha256") not in (None, file_sha256(noisy)):
            raise LineageError(f"{restored} was not restored from {noisy}")
    if r_meta and r_meta["provenance"].get("origin_sha256") not in (None, orig_sha):
        raise LineageError(f"{restored} does not descend from {original}")


def cmd_evaluate(cfg: RunConfig) -> int:
    original = _require(cfg.original, "original")
    restored = _require(cfg.restored, "restored")
    x = load_levels(original)
    y = load_levels(restored)
    z = load_levels(cfg.noisy) if cfg.noisy else None
    for other in filter(None, (y, z)):
        if not x.same_lattice(other):
            raise ConfigError("images differ in dimensions or level count")
    if not cfg.force:
        _check_lineage(original, restored, cfg.noisy)

    report = evaluate(x, y)
    baseline = evaluate(x, z) if z is not None else None
    r_meta = read_sidecar(restored) or {}
    n_meta = (read_sidecar(cfg.noisy) or {}) if cfg.noisy else {}
    prov = r_meta.get("provenance", {})
    method = prov.get("method")
    algo = {"gibbs": "GS", "pca": "PCA"}.get(method, method or "?")
    sigma = n_meta.get("provenance", {}).get("sigma", prov.get("sigma", cfg.sigma))
    image_id = cfg.image_id or Path(original).stem
    rows = [dict(image_id=image_id, N=x.width, sigma=sigma, levels=x.levels, algo=algo,
                 ssim=report.ssim, psnr=report.psnr)]
    if baseline is not None:
        rows.append(dict(image_id=image_id, N=x.width, sigma=sigma, levels=x.levels,
                         algo="noisy", ssim=baseline.ssim, psnr=baseline.psnr))
    text = report_json(report, baseline, image_id=image_id, N=x.width, sigma=sigma,
                       levels=x.levels, algo=algo)
    if cfg.json_out:
        Path(cfg.json_out).write_text(text + "\n")
    else:
        print(text)
    print(table_rows(rows), file=sys.stderr if not cfg.json_out else sys.stdout)
    return EXIT_OK


def cmd_bench(cfg: RunConfig) -> int:
    from .bench import run_benchmark

    report = run_benchmark(cfg.width, cfg.height, cfg.levels, cfg.bench_threads,
                           cfg.bench_repeats, cfg.prior(), cfg.noise(), cfg.pca_params(),
                           cfg.beta0, cfg.seed)
    text = json.dumps(report, indent=2)
    if cfg.json_out:
        Path(cfg.json_out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "degrade": cmd_degrade,
    "denoise": cmd_denoise,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcadenoise", description="Bayesian denoising of gray-level MRF images "
        "with a Gibbs sampler or a lazy probabilistic cellular automaton.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)

    p = sub.add_parser("generate", help="sample an MRF ground-truth image")
    common(p)
    p.add_argument("--output", "-o")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--size", type=int, help="square side length (sets width and height)")
    p.add_argument("--levels", type=int)
    p.add_argument("--coupling", type=float)
    p.add_argument("--gen-beta0", dest="gen_beta0", type=float)
    p.add_argument("--gen-increment", dest="gen_increment", type=float)
    p.add_argument("--gen-period", dest="gen_period", type=int)
    p.add_argument("--gen-steps", dest="gen_steps", type=int)
    p.add_argument("--export-8bit", dest="export_8bit", help="also write a viewable 8-bit PGM")

    p = sub.add_parser("degrade", help="add Gaussian noise and requantise")
    common(p)
    p.add_argument("--input", "-i")
    p.add_argument("--output", "-o")
    p.add_argument("--sigma", type=float)
    p.add_argument("--export-8bit", dest="export_8bit")

    p = sub.add_parser("denoise", help="annealed MAP retrieval")
    common(p)
    p.add_argument("--input", "-i")
    p.add_argument("--output", "-o")
    p.add_argument("--method", choices=("gibbs", "pca"))
    p.add_argument("--coupling", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--beta0", type=float)
    p.add_argument("--beta-increment", dest="beta_increment", type=float)
    p.add_argument("--beta-period", dest="beta_period", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--q", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--pca-kernel", dest="pca_kernel", choices=("balanced", "literal"))
    p.add_argument("--trace", help="trace CSV path (default: <output>.trace.csv)")
    p.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    p.add_argument("--export-8bit", dest="export_8bit")

    p = sub.add_parser("evaluate", help="MSE/PSNR/SSIM against the original")
    common(p)
    p.add_argument("original", nargs="?")
    p.add_argument("restored", nargs="?")
    p.add_argument("--noisy")
    p.add_argument("--image-id", dest="image_id")
    p.add_argument("--sigma", type=float)
    p.add_argument("--json", dest="json_out", help="write metrics JSON here instead of stdout")
    p.add_argument("--force", action="store_true", default=None,
                   help="skip the provenance lineage check")

    p = sub.add_parser("bench", help="pca_step throughput versus thread count")
    common(p)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--levels", type=int)
    p.add_argument("--bench-threads", dest="bench_threads", type=int, nargs="+")
    p.add_argument("--repeats", dest="bench_repeats", type=int)
    p.add_argument("--json", dest="json_out")
    return parser


def _flags(ns: argparse.Namespace) -> dict:
    skip = {"command", "config", "verbose", "export_8bit", "size"}
    flags = {k: v for k, v in vars(ns).items() if k not in skip}
    if getattr(ns, "size", None) is not None:
        flags["width"] = flags["height"] = ns.size
    return flags


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    command = ns.command
    if command == "bench" and ns.width is None and ns.size is None:
        ns.size = 512
    try:
        cfg = validate(resolve(ns.config, _flags(ns)), command)
        code = COMMANDS[command](cfg)
        export = getattr(ns, "export_8bit", None)
        if export and cfg.output:
            export_8bit(export, load_levels(cfg.output))
        return code
    except ConfigError as exc:
        print(f"pcadenoise {command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LineageError as exc:
        print(f"pcadenoise {command}: lineage mismatch: {exc} (use --force to override)",
              file=sys.stderr)
        return EXIT_LINEAGE
    except (OSError, PgmError) as exc:
        print(f"pcadenoise {command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
