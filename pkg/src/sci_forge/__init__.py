"""Simulation, encoding, reconstruction and scoring for degraded video snapshot compressive imaging."""

__version__ = "0.1.0"

from .cacti import adjoint, encode, generate_masks, mask_energy
from .corpus import synthetic_clip, synthetic_corpus
from .core import SeededRng, chunk_video, load_cube, load_frame_dir, save_cube
from .degrade import (DegradationParams, Scenario, ScheduleSpec, apply_scenario, low_light,
                      motion_blur, sample_schedule, scenario_params)
from .gap_tv import GapTvConfig, ReconReport, gap_projection, reconstruct, tv_denoise
from .metrics import MetricReport, psnr, score_cube, ssim

__all__ = [
    "DegradationParams", "GapTvConfig", "MetricReport", "ReconReport", "Scenario",
    "ScheduleSpec", "SeededRng", "adjoint", "apply_scenario", "chunk_video", "encode",
    "gap_projection", "generate_masks", "load_cube", "load_frame_dir", "low_light",
    "mask_energy", "motion_blur", "psnr", "reconstruct", "sample_schedule", "save_cube",
    "synthetic_clip", "synthetic_corpus",
    "scenario_params", "score_cube", "ssim", "tv_denoise",
]
