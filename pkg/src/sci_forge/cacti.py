"""Coded-aperture temporal encoder.

``encode`` sums mask-modulated frames into one snapshot; ``adjoint`` is
its exact transpose. Because every frame is modulated pixel-wise, the
product of the sensing operator with its transpose is diagonal, with
entries given by ``mask_energy``.
"""

from __future__ import annotations

import numpy as np

from .core import as_cube, as_frame

__all__ = ["adjoint", "encode", "forward", "generate_masks", "mask_energy"]


def generate_masks(cr: int, h: int, w: int, density: float = 0.5,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    """I.i.d. Bernoulli(``density``) binary masks of shape (cr, h, w)."""
    if cr < 1 or h < 1 or w < 1:
        raise ValueError(f"mask dimensions must be positive, got ({cr}, {h}, {w})")
    if not 0.0 < density < 1.0:
        raise ValueError(f"density must lie in (0, 1), got {density}")
    rng = rng if rng is not None else np.random.default_rng(0)
    return (rng.random((cr, h, w)) < density).astype(np.float32)


def _check(cube: np.ndarray, masks: np.ndarray) -> None:
    if cube.shape != masks.shape:
        raise ValueError(f"cube shape {cube.shape} does not match mask shape {masks.shape}")


def forward(cube, masks) -> np.ndarray:
    """Noiseless snapshot: per-pixel sum over frames of frame * mask."""
    x, m = as_cube(cube), as_cube(masks, "masks")
    _check(x, m)
    return np.einsum("thw,thw->hw", x, m, dtype=np.float32)


def encode(cube, masks, sigma_meas: float = 0.0,
           rng: np.random.Generator | None = None) -> np.ndarray:
    """Snapshot measurement, optionally with additive white Gaussian noise.

    The result is neither clamped nor quantized.
    """
    y = forward(cube, masks)
    if sigma_meas < 0:
        raise ValueError("sigma_meas must be >= 0")
    if sigma_meas > 0:
        if rng is None:
            raise ValueError("a random generator is required when sigma_meas > 0")
        y = y + (rng.standard_normal(y.shape) * sigma_meas).astype(np.float32)
    return y


def adjoint(meas, masks) -> np.ndarray:
    y, m = as_frame(meas, "meas"), as_cube(masks, "masks")
    if y.shape != m.shape[1:]:
        raise ValueError(f"measurement shape {y.shape} does not match mask frame {m.shape[1:]}")
    return m * y[None]


def mask_energy(masks) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel mask energy and the boolean map of never-sensed pixels."""
    m = as_cube(masks, "masks")
    energy = np.einsum("thw,thw->hw", m, m, dtype=np.float32)
    return energy, energy == 0
