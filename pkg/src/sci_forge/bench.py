"""End-to-end scenario benchmarks and training-pair generation.

A benchmark job degrades one clip under one scenario, splits it into
``cr``-frame groups, encodes each group into a snapshot, reconstructs it
with GAP-TV and scores the result against the clean center frames. Every
job draws from its own child stream of ``data_seed``, so the output is a
pure function of the configuration whatever the thread count.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import platform
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .cacti import encode, generate_masks
from .core import (RNG_ALGORITHM, SeededRng, chunk_video, dump_json, file_sha256,
                   load_frame_dir, save_cube)
from .corpus import synthetic_corpus
from .degrade import (Scenario, ScheduleSpec, apply_scenario, degrade_chunk,
                      sample_schedule, scenario_params)
from .gap_tv import GapTvConfig, reconstruct
from .metrics import score_cube

__all__ = [
    "BenchConfig",
    "BenchResult",
    "BenchRow",
    "gen_training_pairs",
    "load_videos",
    "plot_psnr_bars",
    "run_bench",
    "verify_manifest",
]

log = logging.getLogger(__name__)

CSV_FIELDS = ("scenario", "video", "psnr", "ssim", "chunks", "status")
STANDARD_CRS = (8, 16, 24)


@dataclass
class BenchConfig:
    input_dirs: list[str] = field(default_factory=list)
    scenarios: list[str] = field(default_factory=lambda: [s.value for s in Scenario])
    cr: int = 8
    mask_seed: int = 0
    data_seed: int = 0
    mask_density: float = 0.5
    mask_mode: str = "bernoulli"
    sigma_meas: float = 0.0
    gt_stride: int = 1
    max_chunks: int | None = None
    solver: GapTvConfig = field(default_factory=GapTvConfig)
    out_dir: str = "bench_out"
    pattern: str = "*.pgm"
    method: str = "GAP-TV"

    def __post_init__(self):
        if isinstance(self.solver, dict):
            self.solver = GapTvConfig.from_dict(self.solver)
        self.scenarios = [Scenario.parse(s).value for s in self.scenarios]
        if not self.scenarios:
            raise ValueError("at least one scenario is required")
        if self.cr < 1:
            raise ValueError("cr must be >= 1")
        if self.cr not in STANDARD_CRS:
            warnings.warn(f"cr={self.cr} is outside the usual {STANDARD_CRS}", stacklevel=2)
        if self.mask_mode not in ("bernoulli", "ones"):
            raise ValueError(f"mask_mode must be 'bernoulli' or 'ones', got {self.mask_mode!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "BenchConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["solver"] = asdict(self.solver)
        return d


@dataclass
class BenchRow:
    scenario: str
    video: str
    psnr: float
    ssim: float
    runtime_s: float = 0.0
    chunks: int = 0
    status: str = "ok"

    def csv_record(self) -> dict:
        def fmt(v):
            if math.isnan(v):
                return "nan"
            return "inf" if math.isinf(v) else f"{v:.6f}"
        return {"scenario": self.scenario, "video": self.video, "psnr": fmt(self.psnr),
                "ssim": fmt(self.ssim), "chunks": self.chunks, "status": self.status}


@dataclass
class BenchResult:
    rows: list[BenchRow]
    csv_path: Path
    markdown_path: Path
    manifest_path: Path

    @property
    def failed(self) -> list[BenchRow]:
        return [r for r in self.rows if r.status != "ok"]


def load_videos(input_dirs, pattern: str = "*.pgm") -> dict[str, np.ndarray]:
    """Clips keyed by directory name; the bundled corpus when none are given."""
    if not input_dirs:
        return synthetic_corpus()
    videos = {}
    for d in input_dirs:
        name = Path(d).name
        if name in videos:
            raise ValueError(f"duplicate video name {name!r}")
        videos[name] = load_frame_dir(d, pattern)
    return videos


def _masks_for(cfg: BenchConfig, h: int, w: int) -> np.ndarray:
    if cfg.mask_mode == "ones":
        return np.ones((cfg.cr, h, w), np.float32)
    return generate_masks(cfg.cr, h, w, cfg.mask_density, SeededRng(cfg.mask_seed).generator())


def _run_job(cfg: BenchConfig, video: str, clip: np.ndarray, scenario: str) -> BenchRow:
    t0 = time.perf_counter()
    try:
        rng = SeededRng(cfg.data_seed).child(video, scenario)
        degraded, gt = apply_scenario(clip, scenario, cfg.gt_stride, rng.child("degrade"))
        d_chunks, _ = chunk_video(degraded, cfg.cr)
        g_chunks, _ = chunk_video(gt, cfg.cr)
        if cfg.max_chunks is not None:
            d_chunks, g_chunks = d_chunks[:cfg.max_chunks], g_chunks[:cfg.max_chunks]
        if not d_chunks:
            raise ValueError(f"{gt.shape[0]} ground-truth frames do not fill one {cfg.cr}-frame group")
        masks = _masks_for(cfg, *clip.shape[1:])
        psnrs, ssims = [], []
        for i, (dc, gc) in enumerate(zip(d_chunks, g_chunks)):
            y = encode(dc, masks, cfg.sigma_meas, rng.child("meas", i).generator())
            recon, _ = reconstruct(y, masks, cfg.solver)
            rep = score_cube(gc, recon)
            psnrs.extend(p for p, _ in rep.per_frame)
            ssims.extend(s for _, s in rep.per_frame)
        finite = [p for p in psnrs if math.isfinite(p)]
        psnr = float(np.mean(finite)) if finite else math.inf
        return BenchRow(scenario, video, psnr, float(np.mean(ssims)),
                        time.perf_counter() - t0, len(d_chunks))
    except Exception as exc:  # isolate per-job failures
        log.warning("bench job %s/%s failed: %s", video, scenario, exc)
        return BenchRow(scenario, video, math.nan, math.nan, time.perf_counter() - t0, 0,
                        f"failed: {type(exc).__name__}: {exc}")


def _thread_count() -> int:
    cap = os.environ.get("SCI_FORGE_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def _markdown(rows: list[BenchRow], scenarios: list[str]) -> str:
    videos = list(dict.fromkeys(r.video for r in rows))
    cell = {(r.video, r.scenario): r for r in rows}

    def fmt(rs):
        ok = [r for r in rs if r.status == "ok"]
        if not ok:
            return "failed"
        return f"{np.mean([r.psnr for r in ok]):.2f} / {np.mean([r.ssim for r in ok]):.3f}"

    out = ["| Video | " + " | ".join(scenarios) + " |",
           "|---|" + "---|" * len(scenarios)]
    for v in videos:
        out.append(f"| {v} | " + " | ".join(fmt([cell[v, s]]) for s in scenarios) + " |")
    out.append("| **Mean** | " + " | ".join(fmt([cell[v, s] for v in videos]) for s in scenarios) + " |")
    return "\n".join(out) + "\n"


def run_bench(cfg: BenchConfig, videos: dict[str, np.ndarray] | None = None) -> BenchResult:
    """Run every (video, scenario) job and write CSV, markdown and manifest.

    Outputs in ``cfg.out_dir``: ``bench.csv`` (canonical rows),
    ``bench.md`` (scenario columns, PSNR / SSIM cells), ``timings.json``
    (wall-clock per job, kept out of the CSV so reruns are byte-identical)
    and ``manifest.json``.
    """
    videos = videos if videos is not None else load_videos(cfg.input_dirs, cfg.pattern)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(v, s) for v in videos for s in cfg.scenarios]
    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        rows = list(pool.map(lambda j: _run_job(cfg, j[0], videos[j[0]], j[1]), jobs))

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(r.csv_record())
    csv_path = out / "bench.csv"
    csv_path.write_text(buf.getvalue())
    md_path = out / "bench.md"
    md_path.write_text(_markdown(rows, cfg.scenarios))
    timings_path = out / "timings.json"
    dump_json({f"{r.video}/{r.scenario}": r.runtime_s for r in rows}, timings_path)

    manifest = {
        "tool": "sci-forge",
        "tool_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "rng_algorithm": RNG_ALGORITHM,
        "method": cfg.method,
        "config": cfg.to_dict(),
        "scenario_params": {s: dict(zip(("blur_n", "alpha", "sigma"), scenario_params(s)))
                            for s in cfg.scenarios},
        "videos": {v: list(c.shape) for v, c in videos.items()},
        "failures": [f"{r.video}/{r.scenario}: {r.status}" for r in rows if r.status != "ok"],
        "files": {p.name: file_sha256(p) for p in (csv_path, md_path)},
        "volatile_files": [timings_path.name],
    }
    manifest_path = out / "manifest.json"
    dump_json(manifest, manifest_path)
    return BenchResult(rows, csv_path, md_path, manifest_path)


def verify_manifest(manifest_path) -> list[str]:
    """Re-hash every file the manifest lists; returns the mismatching names."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    bad = []
    for name, digest in manifest.get("files", {}).items():
        p = manifest_path.parent / name
        if not p.exists() or file_sha256(p) != digest:
            bad.append(name)
    return bad


# --- training pairs -----------------------------------------------------

def gen_training_pairs(spec: ScheduleSpec, input_dirs, out_dir, mask_seed: int = 0,
                       mask_density: float = 0.5, pattern: str = "*.pgm",
                       videos: dict[str, np.ndarray] | None = None) -> Path:
    """Write degraded snapshots and clean targets following a smooth schedule.

    Layout under ``out_dir``::

        masks.scib                      shared (chunk_len, H, W) masks per size
        <video>/chunk_0000_meas.scib    degraded snapshot (H, W)
        <video>/chunk_0000_gt.scib      clean center frames (chunk_len, H, W)
        <video>/chunk_0000.json         resolved (N, alpha, sigma, seed)
        manifest.json                   spec, seeds and sha256 of every file

    Masks are keyed by frame size when clips differ in size
    (``masks_<H>x<W>.scib``).
    """
    videos = videos if videos is not None else load_videos(input_dirs, pattern)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    margin = (spec.n_range[1] - 1) // 2
    sizes = {c.shape[1:] for c in videos.values()}
    masks_by_size = {}
    for h, w in sorted(sizes):
        m = generate_masks(spec.chunk_len, h, w, mask_density, SeededRng(mask_seed).generator())
        name = "masks.scib" if len(sizes) == 1 else f"masks_{h}x{w}.scib"
        save_cube(m, out / name)
        masks_by_size[(h, w)] = (m, name)

    files = [name for _, name in masks_by_size.values()]
    chunks_meta = {}
    for video, clip in videos.items():
        centers = list(range(margin, clip.shape[0] - margin))
        n_chunks = len(centers) // spec.chunk_len
        if n_chunks == 0:
            raise ValueError(
                f"{video}: {clip.shape[0]} frames cannot fill a {spec.chunk_len}-frame chunk "
                f"with {2 * margin + 1}-frame blur windows"
            )
        vspec = replace(spec, seed=SeededRng(spec.seed).child(video).derive_seed())
        params = sample_schedule(vspec, n_chunks)
        masks, mask_name = masks_by_size[clip.shape[1:]]
        vdir = out / video
        vdir.mkdir(exist_ok=True)
        for i, p in enumerate(params):
            cs = centers[i * spec.chunk_len:(i + 1) * spec.chunk_len]
            degraded = degrade_chunk(clip, cs, p)
            stem = f"chunk_{i:04d}"
            save_cube(encode(degraded, masks), vdir / f"{stem}_meas.scib")
            save_cube(clip[cs], vdir / f"{stem}_gt.scib")
            dump_json({"video": video, "chunk": i, "centers": cs, "masks": mask_name, **p.as_dict()},
                      vdir / f"{stem}.json")
            files += [f"{video}/{stem}_meas.scib", f"{video}/{stem}_gt.scib", f"{video}/{stem}.json"]
            chunks_meta[f"{video}/{stem}"] = p.as_dict()

    manifest = {
        "tool": "sci-forge",
        "tool_version": __version__,
        "rng_algorithm": RNG_ALGORITHM,
        "schedule": asdict(spec),
        "mask_seed": mask_seed,
        "mask_density": mask_density,
        "chunks": chunks_meta,
        "files": {f: file_sha256(out / f) for f in files},
    }
    dump_json(manifest, out / "manifest.json")
    return out / "manifest.json"


# --- plotting -------------------------------------------------------------

def _read_bench_csv(path) -> list[dict]:
    text = Path(path).read_text() if Path(path).exists() else ""
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError(f"{path}: no benchmark rows")
    for r in rows:
        if "scenario" not in r or "psnr" not in r:
            raise ValueError(f"{path}: malformed benchmark CSV (needs scenario and psnr columns)")
    return rows


def plot_psnr_bars(csv_path, out_path) -> Path:
    """Grouped PSNR bar chart (SVG): one group per scenario, one bar per method.

    Rows without a ``method`` column are labelled ``GAP-TV``; PSNR is
    averaged over videos. The y axis spans 0 to the maximum PSNR rounded
    up to the next multiple of 5 dB.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = _read_bench_csv(csv_path)
    scenarios = list(dict.fromkeys(r["scenario"] for r in rows))
    methods = list(dict.fromkeys(r.get("method") or "GAP-TV" for r in rows))
    values = {}
    for m in methods:
        for s in scenarios:
            vals = [float(r["psnr"]) for r in rows
                    if (r.get("method") or "GAP-TV") == m and r["scenario"] == s
                    and math.isfinite(float(r["psnr"]))]
            values[m, s] = float(np.mean(vals)) if vals else 0.0
    top = max(values.values())
    ymax = max(5.0, 5.0 * math.ceil(top / 5.0))

    plt.rcParams["svg.fonttype"] = "none"
    plt.rcParams["svg.hashsalt"] = "sci-forge"
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(scenarios)), 3.6))
    width = 0.8 / len(methods)
    xs = np.arange(len(scenarios))
    for i, m in enumerate(methods):
        bars = ax.bar(xs + (i - (len(methods) - 1) / 2) * width, [values[m, s] for s in scenarios],
                      width, label=m)
        for patch, s in zip(bars, scenarios):
            patch.set_gid(f"bar:{m}:{s}")
    ax.set_xticks(xs)
    ax.set_xticklabels(scenarios, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, ymax)
    ax.set_yticks(np.arange(0, ymax + 1e-9, 5.0))
    ax.set_ylabel("PSNR (dB)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path
