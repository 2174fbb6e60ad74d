"""GAP-TV reconstruction.

Generalized alternating projection: each outer iteration projects the
current estimate onto the set of cubes consistent with the snapshot, then
applies per-frame anisotropic TV denoising.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .cacti import adjoint, forward, mask_energy
from .core import as_cube, as_frame

__all__ = [
    "GapTvConfig",
    "ReconReport",
    "gap_projection",
    "reconstruct",
    "tv_denoise",
    "tv_objective",
]


@dataclass(frozen=True)
class GapTvConfig:
    outer_iters: int = 100
    tv_weight: float = 0.07
    tv_inner_iters: int = 5
    accelerate: bool = False
    stop_eps: float = 1e-5

    def __post_init__(self):
        if self.outer_iters < 1 or self.tv_inner_iters < 1:
            raise ValueError("iteration counts must be >= 1")
        if not self.tv_weight > 0:
            raise ValueError("tv_weight must be > 0")
        if self.stop_eps < 0:
            raise ValueError("stop_eps must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "GapTvConfig":
        return cls(**d)


@dataclass
class ReconReport:
    iterations_run: int = 0
    residual_history: list[float] = field(default_factory=list)
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _inverse_energy(masks) -> np.ndarray:
    energy, unsensed = mask_energy(masks)
    return np.where(unsensed, 0.0, 1.0 / np.where(unsensed, 1.0, energy)).astype(np.float32)


def gap_projection(x, meas, masks, inv_energy: np.ndarray | None = None) -> np.ndarray:
    """Euclidean projection of ``x`` onto ``{v : forward(v) == meas}``.

    Never-sensed pixels (zero mask energy) are left unchanged.
    """
    x = as_cube(x, "x")
    y = as_frame(meas, "meas")
    if inv_energy is None:
        inv_energy = _inverse_energy(masks)
    residual = y - forward(x, masks)
    return x + adjoint(residual * inv_energy, masks)


# --- anisotropic TV -------------------------------------------------------

def _grad(u):
    return np.diff(u, axis=-1), np.diff(u, axis=-2)


def _grad_adjoint(ph, pv):
    out = np.zeros(ph.shape[:-1] + (ph.shape[-1] + 1,), dtype=ph.dtype)
    out[..., :-1] -= ph
    out[..., 1:] += ph
    out[..., :-1, :] -= pv
    out[..., 1:, :] += pv
    return out


def tv_objective(u, x, lam: float) -> np.ndarray:
    """Per-frame ``0.5*||u - x||^2 + lam*TV(u)`` evaluated in float64."""
    u = np.asarray(u, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    gh, gv = _grad(u)
    axes = (-2, -1)
    return 0.5 * ((u - x) ** 2).sum(axis=axes) + lam * (np.abs(gh).sum(axis=axes) + np.abs(gv).sum(axis=axes))


def tv_denoise(x, lam: float, inner_iters: int = 5, return_history: bool = False):
    """Per-frame anisotropic TV denoising by clipped dual ascent.

    Minimizes ``0.5*||u - x||^2 + lam*(|D_h u|_1 + |D_v u|_1)`` with forward
    differences and a replicate boundary. The dual variable lives in the
    unit box; each step is a gradient step of size ``1/(8*lam)`` followed
    by clipping. The returned iterate is the best primal candidate seen,
    starting from ``x`` itself, so the objective never increases.

    Accepts a single frame (H, W) or a cube (T, H, W).
    """
    if not lam > 0:
        raise ValueError("lam must be > 0")
    x = np.asarray(x, dtype=np.float32)
    single = x.ndim == 2
    xs = x[None] if single else x
    xs = as_cube(xs, "x")

    lam32 = np.float32(lam)
    step = np.float32(1.0 / (8.0 * lam))
    ph = np.zeros(xs.shape[:-1] + (xs.shape[-1] - 1,), np.float32)
    pv = np.zeros(xs.shape[:-2] + (xs.shape[-2] - 1, xs.shape[-1]), np.float32)

    best = xs.copy()
    best_obj = tv_objective(best, xs, lam)
    history = [best_obj.copy()]
    for _ in range(inner_iters):
        u = xs - lam32 * _grad_adjoint(ph, pv)
        gh, gv = _grad(u)
        ph = np.clip(ph + step * gh, -1.0, 1.0)
        pv = np.clip(pv + step * gv, -1.0, 1.0)
        u = xs - lam32 * _grad_adjoint(ph, pv)
        obj = tv_objective(u, xs, lam)
        better = obj < best_obj
        if better.any():
            best[better] = u[better]
            best_obj = np.where(better, obj, best_obj)
        history.append(best_obj.copy())

    out = best[0] if single else best
    if return_history:
        return out, np.array(history)
    return out


# --- solver ---------------------------------------------------------------

def reconstruct(meas, masks, cfg: GapTvConfig | None = None,
                on_projection: Callable[[int, np.ndarray], None] | None = None) -> tuple[np.ndarray, ReconReport]:
    """Recover a (T, H, W) cube from one snapshot with GAP-TV.

    The estimate starts from the mask-normalized back-projection. Each
    iteration logs the pre-projection residual ``||y - Phi x||_2``, then
    projects and denoises. Iteration stops after ``cfg.outer_iters`` or once
    the relative change of the estimate drops below ``cfg.stop_eps``. The
    result is clamped to [0, 1]. ``on_projection(k, v)``, if given, sees
    every projected estimate before denoising.
    """
    cfg = cfg or GapTvConfig()
    masks = as_cube(masks, "masks")
    y = as_frame(meas, "meas")
    if y.shape != masks.shape[1:]:
        raise ValueError(f"measurement shape {y.shape} does not match masks {masks.shape}")
    energy, unsensed = mask_energy(masks)
    if unsensed.all():
        raise ValueError("mask energy is zero everywhere; the scene is unrecoverable")
    inv_energy = _inverse_energy(masks)

    t0 = time.perf_counter()
    report = ReconReport()
    x = adjoint(y / np.maximum(energy, 1.0), masks)
    y_acc = y.copy()
    for _ in range(cfg.outer_iters):
        residual = y - forward(x, masks)
        report.residual_history.append(float(np.linalg.norm(residual.astype(np.float64))))
        if cfg.accelerate:
            y_acc = y_acc + residual
            v = x + adjoint((y_acc - forward(x, masks)) * inv_energy, masks)
        else:
            v = gap_projection(x, y, masks, inv_energy)
        if on_projection is not None:
            on_projection(report.iterations_run, v)
        x_new = tv_denoise(v, cfg.tv_weight, cfg.tv_inner_iters)
        report.iterations_run += 1
        old_norm = float(np.linalg.norm(x))
        change = float(np.linalg.norm(x_new - x))
        x = x_new
        if change == 0.0 or (old_norm > 0 and change / old_norm < cfg.stop_eps):
            break
    report.wall_time = time.perf_counter() - t0
    return np.clip(x, 0.0, 1.0).astype(np.float32), report
