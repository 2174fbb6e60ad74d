"""PSNR and SSIM for frames and cubes (peak value 1.0, float64 accumulation)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import as_cube, as_frame

__all__ = ["MetricReport", "REPORT_SCHEMA_VERSION", "gaussian_window", "psnr", "score_cube", "ssim"]

REPORT_SCHEMA_VERSION = 1

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(ref, test) -> float:
    """``10*log10(1/MSE)``; identical frames give ``inf``."""
    a = as_frame(ref, "ref", np.float64)
    b = as_frame(test, "test", np.float64)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 1D Gaussian taps; the 2D window is their outer product."""
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def _filter_valid(img, g):
    # separable valid-region correlation
    rows = sliding_window_view(img, g.size, axis=0) @ g
    return sliding_window_view(rows, g.size, axis=1) @ g


def ssim(ref, test, data_range: float = 1.0) -> float:
    """Mean SSIM over all fully-contained 11x11 Gaussian windows (sigma 1.5)."""
    a = as_frame(ref, "ref", np.float64)
    b = as_frame(test, "test", np.float64)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape}")
    g = gaussian_window()
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    mu_a, mu_b = _filter_valid(a, g), _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a ** 2
    var_b = _filter_valid(b * b, g) - mu_b ** 2
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float
    per_frame: list[tuple[float, float]] = field(default_factory=list)
    psnr_inf_frames: int = 0

    def to_dict(self) -> dict:
        def enc(v):
            return "inf" if math.isinf(v) else v
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "ssim_window": "gaussian 11x11 sigma=1.5, valid region",
            "psnr_db": enc(self.psnr_db),
            "ssim": self.ssim,
            "psnr_inf_frames": self.psnr_inf_frames,
            "per_frame": [{"psnr_db": enc(p), "ssim": s} for p, s in self.per_frame],
        }


def score_cube(ref, test) -> MetricReport:
    """Per-frame PSNR/SSIM and their means.

    Frames with infinite PSNR are left out of the PSNR mean and counted in
    ``psnr_inf_frames``; the mean is ``inf`` only if every frame is exact.
    """
    r, t = as_cube(ref, "ref", np.float64), as_cube(test, "test", np.float64)
    if r.shape != t.shape:
        raise ValueError(f"cube shapes differ: {r.shape} vs {t.shape}")
    per_frame = [(psnr(a, b), ssim(a, b)) for a, b in zip(r, t)]
    finite = [p for p, _ in per_frame if math.isfinite(p)]
    n_inf = len(per_frame) - len(finite)
    mean_psnr = float(np.mean(finite)) if finite else math.inf
    mean_ssim = float(np.mean([s for _, s in per_frame]))
    return MetricReport(mean_psnr, mean_ssim, per_frame, n_inf)
