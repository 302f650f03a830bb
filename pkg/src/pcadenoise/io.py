"""Binary PGM (P5) images with a JSON sidecar carrying lattice and provenance."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .core import LevelImage


class PgmError(ValueError):
    pass


def _tokens(buf: bytes, count: int) -> Tuple[list, int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    pos = 0
    while len(out) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(buf):
            raise PgmError("truncated PGM header")
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        out.append(buf[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return out, pos + 1


def read_pgm(path) -> Tuple[np.ndarray, int]:
    """Return the (height, width) raster and maxval of a binary PGM file."""
    buf = Path(path).read_bytes()
    toks, offset = _tokens(buf, 4)
    if toks[0] != b"P5":
        raise PgmError(f"{path}: not a binary PGM (magic {toks[0]!r})")
    try:
        width, height, maxval = (int(t) for t in toks[1:])
    except ValueError as exc:
        raise PgmError(f"{path}: malformed header") from exc
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise PgmError(f"{path}: invalid header values {width} {height} {maxval}")
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    n = width * height
    if len(buf) < offset + n * dtype.itemsize:
        raise PgmError(f"{path}: raster shorter than {n} samples")
    raster = np.frombuffer(buf, dtype=dtype, count=n, offset=offset)
    raster = raster.reshape(height, width).astype(np.int64)
    if raster.max() > maxval:
        raise PgmError(f"{path}: sample exceeds maxval {maxval}")
    return raster, maxval


def write_pgm(path, raster: np.ndarray, maxval: int):
    raster = np.asarray(raster)
    if not 0 < maxval < 65536:
        raise PgmError(f"maxval {maxval} out of range")
    height, width = raster.shape
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(raster.astype(dtype)).tobytes())


def save_levels(path, img: LevelImage):
    """Level indices verbatim, maxval = levels - 1."""
    if img.levels < 2:
        raise PgmError("cannot store a single-level image (maxval would be 0)")
    write_pgm(path, img.to_array(), img.levels - 1)


def load_levels(path, levels: Optional[int] = None) -> LevelImage:
    raster, maxval = read_pgm(path)
    if levels is None:
        levels = maxval + 1
    elif levels != maxval + 1:
        raise PgmError(f"{path}: maxval {maxval} does not match {levels} levels")
    return LevelImage.from_array(raster, levels)


def export_8bit(path, img: LevelImage):
    """Viewing copy scaled by 255 / (levels - 1)."""
    scaled = np.rint(img.to_array() * (255.0 / max(img.levels - 1, 1)))
    write_pgm(path, scaled.astype(np.uint8), 255)


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_sidecar(path, img: LevelImage, seed, provenance: dict):
    meta = {
        "width": img.width,
        "height": img.height,
        "levels": img.levels,
        "seed": seed,
        "sha256": file_sha256(path),
        "provenance": provenance,
    }
    text = json.dumps(meta, indent=2, sort_keys=True) + "\n"
    sidecar_path(path).write_text(text)
    return meta


def read_sidecar(path) -> Optional[dict]:
    side = sidecar_path(path)
    if not side.exists():
        return None
    return json.loads(side.read_text())


def save_with_sidecar(path, img: LevelImage, seed, provenance: dict) -> dict:
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    save_levels(path, img)
    return write_sidecar(path, img, seed, provenance)
