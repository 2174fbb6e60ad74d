"""Procedural moving-shape clips used as a small, download-free test corpus."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import SeededRng, write_pgm

__all__ = ["CORPUS_NAMES", "synthetic_clip", "synthetic_corpus", "write_clip"]

CORPUS_NAMES = ("shapes_a", "shapes_b", "shapes_c")


def _soft_disk(yy, xx, cy, cx, r):
    d = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
    return np.clip(r - d + 0.5, 0.0, 1.0)


def _soft_box(yy, xx, cy, cx, hy, hx):
    a = np.clip(hy - np.abs(yy - cy) + 0.5, 0.0, 1.0)
    b = np.clip(hx - np.abs(xx - cx) + 0.5, 0.0, 1.0)
    return a * b


def synthetic_clip(seed: int, frames: int = 64, size: int = 64, n_shapes: int = 4) -> np.ndarray:
    """A (frames, size, size) clip of anti-aliased shapes drifting over a gradient.

    Shapes move with constant sub-pixel velocities of 0.4 to 1.2 px/frame
    and wrap around the borders, so there is always motion to blur.
    """
    g = SeededRng(seed).generator()
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    angle = g.uniform(0, 2 * np.pi)
    ramp = (np.cos(angle) * xx + np.sin(angle) * yy) / size
    background = 0.25 + 0.2 * (ramp - ramp.min()) / (np.ptp(ramp) + 1e-12)
    shapes = []
    for _ in range(n_shapes):
        speed = g.uniform(0.4, 1.2)
        heading = g.uniform(0, 2 * np.pi)
        shapes.append({
            "kind": g.integers(2),
            "pos": g.uniform(0, size, 2),
            "vel": speed * np.array([np.sin(heading), np.cos(heading)]),
            "size": g.uniform(5, 11, 2),
            "level": g.uniform(0.55, 0.95) if g.random() < 0.6 else g.uniform(0.02, 0.15),
        })
    clip = np.empty((frames, size, size), np.float32)
    for t in range(frames):
        img = background.copy()
        for s in shapes:
            cy, cx = (s["pos"] + t * s["vel"]) % size
            cover = np.zeros_like(img)
            for dy in (-size, 0, size):
                for dx in (-size, 0, size):
                    if s["kind"] == 0:
                        c = _soft_disk(yy, xx, cy + dy, cx + dx, s["size"][0])
                    else:
                        c = _soft_box(yy, xx, cy + dy, cx + dx, s["size"][0], s["size"][1])
                    cover = np.maximum(cover, c)
            img = img * (1 - cover) + s["level"] * cover
        clip[t] = np.clip(img, 0.0, 1.0)
    return clip


def synthetic_corpus(frames: int = 64, size: int = 64, seed: int = 2024) -> dict[str, np.ndarray]:
    """The bundled corpus: three deterministic clips keyed by name."""
    root = SeededRng(seed)
    return {name: synthetic_clip(root.child(name).derive_seed(), frames, size) for name in CORPUS_NAMES}


def write_clip(clip, directory) -> Path:
    """Write a clip as zero-padded 8-bit PGM frames ``frame_0000.pgm``..."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(clip):
        write_pgm(d / f"frame_{i:04d}.pgm", frame)
    return d
