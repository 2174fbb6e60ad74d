"""
Forward kernels of a restoration block
======================================

The block combines a dilated-convolution branch, a frequency branch,
a spatial-temporal branch and a feed-forward refinement. Only forward
passes are provided; weights are seeded or loaded from disk.
"""

import tempfile
from pathlib import Path

import numpy as np

from sci_forge.net_blocks import (FebConfig, feb_forward, load_weights, robust_cformer_forward,
                                  save_weights, seed_weights, selftest, tsab_attention)

c = 8
w = seed_weights(0, channels=c)
print(len(list(w)), "weight tensors, e.g. msdb.conv_d4.weight", w["msdb.conv_d4.weight"].shape)

# Features are (channels, frames, height, width)
x = np.random.default_rng(1).standard_normal((c, 8, 16, 16)).astype(np.float32)
y = robust_cformer_forward(x, w)
print("block output", y.shape, "finite:", bool(np.isfinite(y).all()))

# The temporal attention works for any number of frames with the same weights
for t in (1, 8, 16, 24):
    a = tsab_attention(x[:, :1].repeat(t, axis=1), w)
    print(f"T={t:>2}: attention {a.shape}, rows sum to {a.sum(-1).mean():.6f}")

# The frequency branch only touches the first half of the channels
out = feb_forward(x, w, FebConfig())
print("second half untouched:", np.array_equal(out[c // 2:], x[c // 2:]))
print("first half standardized: mean %.2e, std %.3f" % (out[: c // 2].mean(), out[: c // 2].std()))

# Weights round-trip through a flat binary file plus a JSON index
with tempfile.TemporaryDirectory() as d:
    path = save_weights(w, Path(d) / "block.scib")
    back = load_weights(path)
    print("reloaded identical:", all(np.array_equal(back[k], w[k]) for k in w))

for name, ok, detail in selftest():
    print("PASS" if ok else "FAIL", name, detail)
