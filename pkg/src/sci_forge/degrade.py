"""Synthetic motion blur and low-light degradation of high-speed video.

The degradation chain applied to a clean scene is, in order: temporal
averaging of ``N`` consecutive high-speed frames (blur), the quadratic
darkening curve ``I - alpha * I * (1 - I)``, then additive Gaussian read
noise, followed by a single clamp to [0, 1].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import SeededRng, as_cube, as_frame

__all__ = [
    "DegradationParams",
    "Scenario",
    "ScheduleSpec",
    "TABLE1_MAX_BLUR",
    "apply_scenario",
    "darken",
    "interpolate_params",
    "low_light",
    "motion_blur",
    "nearest_odd",
    "sample_schedule",
    "scenario_params",
]


@dataclass(frozen=True)
class DegradationParams:
    """Blur window, darkening level and noise std (8-bit units)."""

    blur_n: int = 1
    darken_alpha: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.blur_n < 1 or self.blur_n % 2 == 0:
            raise ValueError(f"blur_n must be an odd integer >= 1, got {self.blur_n}")
        if not 0.0 <= self.darken_alpha <= 1.0:
            raise ValueError(f"darken_alpha must lie in [0, 1], got {self.darken_alpha}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")

    def as_dict(self) -> dict:
        return {"blur_n": self.blur_n, "darken_alpha": self.darken_alpha,
                "noise_sigma": self.noise_sigma, "seed": self.seed}


class Scenario(enum.Enum):
    CLEAN = "Clean"
    MOTION_BLUR_L1 = "MotionBlur-L1"
    MOTION_BLUR_L2 = "MotionBlur-L2"
    MOTION_BLUR_L3 = "MotionBlur-L3"
    LOW_LIGHT_L1 = "LowLight-L1"
    LOW_LIGHT_L2 = "LowLight-L2"
    LOW_LIGHT_L3 = "LowLight-L3"
    MIXED_L1 = "Mixed-L1"
    MIXED_L2 = "Mixed-L2"
    MIXED_L3 = "Mixed-L3"

    @classmethod
    def parse(cls, name: "str | Scenario") -> "Scenario":
        if isinstance(name, Scenario):
            return name
        for s in cls:
            if s.value.lower() == name.lower() or s.name.lower() == name.lower():
                return s
        raise ValueError(f"unknown scenario {name!r}; expected one of {[s.value for s in cls]}")

    @property
    def family(self) -> str:
        return self.value.split("-")[0]

    @property
    def level(self) -> int:
        return 0 if self is Scenario.CLEAN else int(self.value[-1])


# (N, alpha, sigma); None where the degradation is absent.
_TABLE1 = {
    Scenario.CLEAN: (None, None, None),
    Scenario.MOTION_BLUR_L1: (7, None, None),
    Scenario.MOTION_BLUR_L2: (11, None, None),
    Scenario.MOTION_BLUR_L3: (15, None, None),
    Scenario.LOW_LIGHT_L1: (None, 0.6, 10.0),
    Scenario.LOW_LIGHT_L2: (None, 0.8, 25.0),
    Scenario.LOW_LIGHT_L3: (None, 0.9, 40.0),
    Scenario.MIXED_L1: (7, 0.6, 10.0),
    Scenario.MIXED_L2: (11, 0.8, 25.0),
    Scenario.MIXED_L3: (15, 0.9, 40.0),
}

TABLE1_MAX_BLUR = 15


def scenario_params(scenario: "Scenario | str") -> tuple[int | None, float | None, float | None]:
    """Table lookup of ``(blur_n, alpha, sigma)`` with ``None`` for absent terms."""
    return _TABLE1[Scenario.parse(scenario)]


def motion_blur(high_speed, center_index: int, blur_n: int) -> np.ndarray:
    """Average the ``blur_n`` frames centred on ``center_index``."""
    cube = as_cube(high_speed, "high_speed")
    if blur_n < 1 or blur_n % 2 == 0:
        raise ValueError(f"blur_n must be odd and >= 1, got {blur_n}")
    half = (blur_n - 1) // 2
    lo, hi = center_index - half, center_index + half
    if lo < 0 or hi >= cube.shape[0]:
        raise IndexError(
            f"blur window [{lo}, {hi}] falls outside the {cube.shape[0]} available frames"
        )
    window = cube[lo:hi + 1].astype(np.float64)
    return window.mean(axis=0).astype(np.float32)


def darken(frame, alpha: float) -> np.ndarray:
    """Quadratic darkening curve; maps [0, 1] into [0, 1] for alpha in [0, 1]."""
    f = np.asarray(frame, dtype=np.float32)
    a = np.float32(alpha)
    return f - a * f * (np.float32(1.0) - f)


def low_light(frame, alpha: float, sigma: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """Darken a [0, 1] frame and add Gaussian noise of std ``sigma / 255``.

    Parameters
    ----------
    frame : array_like, shape (H, W)
        Clean normalized intensities.
    alpha : float
        Darkening level in [0, 1].
    sigma : float
        Noise standard deviation in 8-bit units; ``0`` disables noise and
        no random numbers are drawn.
    rng : numpy.random.Generator
        Source of the per-pixel noise. Required when ``sigma > 0``.
    """
    f = as_frame(frame)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    out = darken(f, alpha)
    if sigma > 0:
        if rng is None:
            raise ValueError("a random generator is required when sigma > 0")
        noise = rng.standard_normal(f.shape, dtype=np.float64) * (sigma / 255.0)
        out = out + noise.astype(np.float32)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def _degrade_frame(cube, center, n, alpha, sigma, rng: SeededRng) -> np.ndarray:
    frame = motion_blur(cube, center, n or 1)
    if alpha is None and sigma is None:
        return frame
    return low_light(frame, alpha or 0.0, sigma or 0.0, rng.child(center).generator())


def apply_scenario(cube_hs, scenario: "Scenario | str", gt_stride: int = 1,
                   rng: SeededRng | None = None,
                   margin: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Build a (degraded, ground-truth) cube pair from a high-speed source.

    Ground-truth centers start at ``margin`` and step by ``gt_stride``
    while a window of half-width ``margin`` still fits. ``margin`` defaults
    to half the widest table window so that every scenario sees the same
    ground-truth frames; it must cover the scenario's own window.
    """
    cube = as_cube(cube_hs, "cube_hs")
    scenario = Scenario.parse(scenario)
    if gt_stride < 1:
        raise ValueError("gt_stride must be >= 1")
    n, alpha, sigma = scenario_params(scenario)
    if margin is None:
        margin = (TABLE1_MAX_BLUR - 1) // 2
    if n is not None and (n - 1) // 2 > margin:
        raise ValueError(f"margin {margin} is narrower than the {n}-frame blur window")
    centers = list(range(margin, cube.shape[0] - margin, gt_stride))
    if not centers:
        raise ValueError(
            f"{cube.shape[0]} frames are insufficient for a {2 * margin + 1}-frame window"
        )
    rng = rng or SeededRng(0)
    gt = cube[centers].copy()
    if scenario is Scenario.CLEAN:
        return gt.copy(), gt
    degraded = np.stack([_degrade_frame(cube, c, n, alpha, sigma, rng) for c in centers])
    return degraded, gt


# --- training schedules -------------------------------------------------

MAX_STEP_N = 4
MAX_STEP_ALPHA = 0.15
MAX_STEP_SIGMA = 8.0


@dataclass(frozen=True)
class ScheduleSpec:
    n_range: tuple[int, int] = (3, 17)
    alpha_range: tuple[float, float] = (0.0, 0.9)
    sigma_range: tuple[float, float] = (0.0, 40.0)
    chunk_len: int = 8
    seed: int = 0

    def __post_init__(self):
        n0, n1 = self.n_range
        if n0 > n1 or n0 < 1 or n0 % 2 == 0 or n1 % 2 == 0:
            raise ValueError(f"n_range must be a non-empty interval of odd integers, got {self.n_range}")
        a0, a1 = self.alpha_range
        if not 0.0 <= a0 <= a1 <= 1.0:
            raise ValueError(f"alpha_range must be a non-empty sub-interval of [0, 1], got {self.alpha_range}")
        s0, s1 = self.sigma_range
        if not 0.0 <= s0 <= s1:
            raise ValueError(f"sigma_range must be a non-empty interval of non-negative values, got {self.sigma_range}")
        if self.chunk_len < 1:
            raise ValueError("chunk_len must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ScheduleSpec":
        kw = dict(d)
        for k in ("n_range", "alpha_range", "sigma_range"):
            if k in kw:
                kw[k] = tuple(kw[k])
        return cls(**kw)

    def anchor_spacing(self) -> int:
        """Chunks between anchors so per-chunk steps stay within the bounds."""
        span_n = self.n_range[1] - self.n_range[0]
        span_a = self.alpha_range[1] - self.alpha_range[0]
        span_s = self.sigma_range[1] - self.sigma_range[0]
        # odd rounding moves each end by at most 1, and the difference of
        # two odd numbers is even, so a linear step below 4 rounds to <= 4
        k_n = span_n // MAX_STEP_N + 1
        k_a = math.ceil(span_a / MAX_STEP_ALPHA - 1e-9)
        k_s = math.ceil(span_s / MAX_STEP_SIGMA - 1e-9)
        return max(1, k_n, k_a, k_s)


def nearest_odd(x: float, lo: int | None = None, hi: int | None = None) -> int:
    n = 2 * math.floor(x / 2.0) + 1
    if lo is not None:
        n = max(n, lo)
    if hi is not None:
        n = min(n, hi)
    return n


def interpolate_params(start: tuple[float, float, float], end: tuple[float, float, float],
                       steps: int, n_bounds: tuple[int, int] | None = None) -> list[tuple[int, float, float]]:
    """Linearly interpolate ``(N, alpha, sigma)`` over ``steps + 1`` points.

    Both endpoints are included; N is rounded to the nearest odd integer.
    """
    lo, hi = n_bounds if n_bounds else (None, None)
    out = []
    for i in range(steps + 1):
        t = i / steps if steps else 0.0
        n = start[0] + t * (end[0] - start[0])
        a = start[1] + t * (end[1] - start[1])
        s = start[2] + t * (end[2] - start[2])
        out.append((nearest_odd(n, lo, hi), float(a), float(s)))
    return out


def _draw_anchor(spec: ScheduleSpec, g: np.random.Generator) -> tuple[int, float, float]:
    n_choices = np.arange(spec.n_range[0], spec.n_range[1] + 1, 2)
    n = int(g.choice(n_choices))
    a = float(g.uniform(*spec.alpha_range)) if spec.alpha_range[1] > spec.alpha_range[0] else spec.alpha_range[0]
    s = float(g.uniform(*spec.sigma_range)) if spec.sigma_range[1] > spec.sigma_range[0] else spec.sigma_range[0]
    return n, a, s


def sample_schedule(spec: ScheduleSpec, chunk_count: int) -> list[DegradationParams]:
    """Per-chunk degradation parameters that drift smoothly over a video.

    Anchor triples are drawn uniformly every ``spec.anchor_spacing()``
    chunks; chunks in between are linearly interpolated.
    """
    if chunk_count < 1:
        raise ValueError("chunk_count must be >= 1")
    root = SeededRng(spec.seed)
    g = root.child("anchors").generator()
    spacing = spec.anchor_spacing()
    n_anchors = (chunk_count - 1) // spacing + 2
    anchors = [_draw_anchor(spec, g) for _ in range(n_anchors)]
    triples: list[tuple[int, float, float]] = []
    for k in range(n_anchors - 1):
        seg = interpolate_params(anchors[k], anchors[k + 1], spacing, spec.n_range)
        triples.extend(seg[:-1])
        if len(triples) >= chunk_count:
            break
    return [
        DegradationParams(n, min(max(a, 0.0), 1.0), max(s, 0.0), root.child("chunk", i).derive_seed())
        for i, (n, a, s) in enumerate(triples[:chunk_count])
    ]


def degrade_chunk(cube_hs, centers, params: DegradationParams) -> np.ndarray:
    """Degrade the frames at ``centers`` with one parameter triple."""
    rng = SeededRng(params.seed)
    return np.stack([
        low_light(motion_blur(cube_hs, c, params.blur_n), params.darken_alpha,
                  params.noise_sigma, rng.child(c).generator())
        for c in centers
    ])
