"""MSE, PSNR and global SSIM on luminances, plus report formatting."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np

from .core import LevelImage, check_same_lattice

# Stabilising constants for a dynamic range of 1 (luminances in [0, 1]).
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_C1 = (SSIM_K1 * 1.0) ** 2
SSIM_C2 = (SSIM_K2 * 1.0) ** 2

TABLE_COLUMNS = ("image id", "N", "sigma", "levels", "algo", "SSIM", "PSNR")


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    psnr: float
    ssim: float

    def to_dict(self) -> dict:
        out = asdict(self)
        if math.isinf(self.psnr):
            out["psnr"] = "inf"
        return out


def _lum(img):
    if isinstance(img, LevelImage):
        return img.luminance()
    return np.asarray(img, dtype=float)


def _pair(x, y):
    if isinstance(x, LevelImage) and isinstance(y, LevelImage):
        check_same_lattice(x, y)
    a, b = _lum(x), _lum(y)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(x, y) -> float:
    a, b = _pair(x, y)
    return float(np.mean((a - b) ** 2))


def psnr(x, y) -> float:
    """``20 log10(max(x) / sqrt(mse))`` with ``x`` the original; ``inf`` when identical."""
    a, b = _pair(x, y)
    peak = float(a.max())
    if peak <= 0:
        raise ValueError("PSNR undefined: original image has zero peak luminance")
    err = float(np.mean((a - b) ** 2))
    if err == 0:
        return math.inf
    return 20.0 * math.log10(peak / math.sqrt(err))


def ssim(x, y, c1: float = SSIM_C1, c2: float = SSIM_C2) -> float:
    """Single-window SSIM from whole-image population statistics."""
    a, b = _pair(x, y)
    mu_a, mu_b = a.mean(), b.mean()
    da, db = a - mu_a, b - mu_b
    var_a, var_b = np.mean(da * da), np.mean(db * db)
    cov = np.mean(da * db)
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(num / den)


def evaluate(original, restored, c1: float = SSIM_C1, c2: float = SSIM_C2) -> MetricsReport:
    return MetricsReport(mse(original, restored), psnr(original, restored),
                         ssim(original, restored, c1, c2))


def format_psnr(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.4f}"


def table_rows(rows: Iterable[dict]) -> str:
    """Aligned plain-text table with the columns of TABLE_COLUMNS."""
    body = [[str(r["image_id"]), str(r["N"]), f"{r['sigma']:.2f}", str(r["levels"]),
             str(r["algo"]), f"{r['ssim']:.4f}", format_psnr(r["psnr"])] for r in rows]
    widths = [max(len(c), *(len(row[k]) for row in body)) if body else len(c)
              for k, c in enumerate(TABLE_COLUMNS)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(TABLE_COLUMNS, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in body]
    return "\n".join(lines)


def report_json(report: MetricsReport, baseline: Optional[MetricsReport] = None,
                **extra) -> str:
    payload = dict(extra)
    payload["restored"] = report.to_dict()
    if baseline is not None:
        payload["noisy"] = baseline.to_dict()
    payload["ssim_constants"] = {"c1": SSIM_C1, "c2": SSIM_C2}
    return json.dumps(payload, indent=2, sort_keys=True)
