"""
A small degradation benchmark
=============================

Runs GAP-TV on every scenario of the bundled synthetic corpus and writes
a CSV, a markdown table and a bar chart.
"""

import tempfile
from pathlib import Path

from sci_forge.bench import BenchConfig, plot_psnr_bars, run_bench
from sci_forge.gap_tv import GapTvConfig

out = Path(tempfile.mkdtemp(prefix="sci_forge_bench_"))

# Keep it short: one chunk per clip and fewer solver iterations
cfg = BenchConfig(max_chunks=1, solver=GapTvConfig(outer_iters=40), out_dir=str(out))
result = run_bench(cfg)
print(result.markdown_path.read_text())

# Harder scenarios should score lower within each family
svg = plot_psnr_bars(result.csv_path, out / "psnr.svg")
print("wrote", result.csv_path, "and", svg)
