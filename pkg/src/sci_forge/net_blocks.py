"""Forward-only numpy kernels for the RobustCFormer block.

Feature tensors are ``(C, T, H, W)`` float32 arrays. The block sums four
signals: its input, the spatio-temporal baseline branch (spatial
convolutions followed by temporal self-attention), the multi-scale dilated
deblur branch, and the frequency enhancement branch; a pointwise
feed-forward network with a residual connection refines the sum.

All forwards take ``activate=True``; passing ``False`` replaces every
GELU with the identity, which turns each branch into a linear map so that
identity and scaling configurations can be checked exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

from .core import FormatError, load_cube, save_cube

__all__ = [
    "BlockWeights",
    "FebConfig",
    "conv3d",
    "feb_forward",
    "ffn_forward",
    "gelu",
    "half_spectrum_energy",
    "load_weights",
    "msdb_forward",
    "robust_cformer_forward",
    "save_weights",
    "scb_forward",
    "seed_weights",
    "selftest",
    "tsab_attention",
    "tsab_forward",
    "weight_shapes",
]

MSDB_DILATIONS = (1, 2, 4)


def gelu(x):
    x = np.asarray(x)
    return (0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))).astype(x.dtype)


def _act(x, activate: bool):
    return gelu(x) if activate else x


def _as_features(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float32)
    if a.ndim != 4 or min(a.shape) < 1:
        raise ValueError(f"features must be a non-empty (C, T, H, W) array, got {a.shape}")
    return a


# --- weights ---------------------------------------------------------------

def weight_shapes(channels: int, feb_hidden_mult: int = 1) -> dict[str, tuple[int, ...]]:
    """Name -> shape for every tensor of one block with ``channels`` features."""
    c = channels
    k = (3, 3, 3)
    hidden = feb_hidden_mult * c
    shapes: dict[str, tuple[int, ...]] = {}
    for d in MSDB_DILATIONS:
        shapes[f"msdb.conv_d{d}.weight"] = (c, c) + k
        shapes[f"msdb.conv_d{d}.bias"] = (c,)
    shapes["msdb.fuse.weight"] = (c, 3 * c)
    shapes["msdb.fuse.bias"] = (c,)
    shapes["feb.fc1.weight"] = (hidden, c)
    shapes["feb.fc1.bias"] = (hidden,)
    shapes["feb.fc2.weight"] = (c, hidden)
    shapes["feb.fc2.bias"] = (c,)
    for i in (1, 2):
        shapes[f"scb.conv{i}.weight"] = (c, c) + k
        shapes[f"scb.conv{i}.bias"] = (c,)
    for name in ("query", "key", "value", "out"):
        shapes[f"tsab.{name}.weight"] = (c, c)
    shapes["ffn.fc1.weight"] = (4 * c, c)
    shapes["ffn.fc1.bias"] = (4 * c,)
    shapes["ffn.fc2.weight"] = (c, 4 * c)
    shapes["ffn.fc2.bias"] = (c,)
    return shapes


class BlockWeights:
    """Validated, read-only mapping of named block tensors."""

    def __init__(self, tensors: dict[str, np.ndarray], channels: int, feb_hidden_mult: int = 1):
        if channels < 2 or channels % 2:
            raise ValueError(f"channels must be a positive even number, got {channels}")
        if feb_hidden_mult < 1:
            raise ValueError("feb_hidden_mult must be >= 1")
        expected = weight_shapes(channels, feb_hidden_mult)
        checked = {}
        for name, shape in expected.items():
            if name not in tensors:
                raise KeyError(f"missing weight tensor {name!r}")
            t = np.asarray(tensors[name], dtype=np.float32)
            if t.shape != shape:
                raise ValueError(f"weight tensor {name!r} has shape {t.shape}, expected {shape}")
            if not np.all(np.isfinite(t)):
                raise ValueError(f"weight tensor {name!r} contains non-finite values")
            t = t.copy()
            t.flags.writeable = False
            checked[name] = t
        self._tensors = checked
        self.channels = channels
        self.feb_hidden_mult = feb_hidden_mult

    def __getitem__(self, name: str) -> np.ndarray:
        return self._tensors[name]

    def __iter__(self):
        return iter(self._tensors)

    def items(self):
        return self._tensors.items()

    def replace(self, **updates: np.ndarray) -> "BlockWeights":
        """Copy with some tensors swapped; keyword names use ``__`` for ``.``."""
        tensors = dict(self._tensors)
        for k, v in updates.items():
            tensors[k.replace("__", ".")] = v
        return BlockWeights(tensors, self.channels, self.feb_hidden_mult)

    @classmethod
    def zeros(cls, channels: int, feb_hidden_mult: int = 1) -> "BlockWeights":
        shapes = weight_shapes(channels, feb_hidden_mult)
        return cls({n: np.zeros(s, np.float32) for n, s in shapes.items()}, channels, feb_hidden_mult)


def seed_weights(seed: int, channels: int, feb_hidden_mult: int = 1) -> BlockWeights:
    """Weights drawn from N(0, 1/fan_in); biases start at zero."""
    rng = np.random.Generator(np.random.PCG64(seed))
    tensors = {}
    for name, shape in weight_shapes(channels, feb_hidden_mult).items():
        if name.endswith(".bias"):
            tensors[name] = np.zeros(shape, np.float32)
        else:
            fan_in = int(np.prod(shape[1:]))
            tensors[name] = (rng.standard_normal(shape) / np.sqrt(fan_in)).astype(np.float32)
    return BlockWeights(tensors, channels, feb_hidden_mult)


def save_weights(weights: BlockWeights, path) -> Path:
    """Write all tensors into one flat SCIB container plus a JSON index.

    The index (``<path>.index.json``) maps each tensor name to its dims and
    its byte offset into the float32 payload. Returns ``path``.
    """
    path = Path(path)
    index = {"channels": weights.channels, "feb_hidden_mult": weights.feb_hidden_mult, "tensors": {}}
    flat, offset = [], 0
    for name, t in weights.items():
        index["tensors"][name] = {"dims": list(t.shape), "offset": offset * 4}
        flat.append(t.ravel())
        offset += t.size
    save_cube(np.concatenate(flat), path)
    index_path = path.with_name(path.name + ".index.json")
    index_path.write_text(json.dumps(index, indent=2) + "\n")
    return path


def load_weights(path) -> BlockWeights:
    path = Path(path)
    index_path = path.with_name(path.name + ".index.json")
    if not index_path.exists():
        raise FileNotFoundError(f"weight index not found: {index_path}")
    index = json.loads(index_path.read_text())
    flat = load_cube(path)
    if flat.ndim != 1:
        raise FormatError(f"{path}: weight payload must be one-dimensional")
    tensors = {}
    for name, entry in index["tensors"].items():
        dims = tuple(entry["dims"])
        n = int(np.prod(dims))
        if int(entry["offset"]) % 4:
            raise FormatError(f"{path}: tensor {name!r} has a misaligned byte offset")
        off = int(entry["offset"]) // 4
        if off + n > flat.size:
            raise FormatError(f"{path}: tensor {name!r} runs past the end of the payload")
        tensors[name] = flat[off:off + n].reshape(dims)
    return BlockWeights(tensors, int(index["channels"]), int(index.get("feb_hidden_mult", 1)))


# --- convolution ---------------------------------------------------------

def conv3d(x, kernel, bias, dilation: int = 1) -> np.ndarray:
    """Shape-preserving 3x3x3 cross-correlation, zero padding ``dilation``."""
    x = _as_features(x)
    c_out, c_in = kernel.shape[:2]
    if x.shape[0] != c_in or kernel.shape[2:] != (3, 3, 3):
        raise ValueError(f"kernel {kernel.shape} does not fit input with {x.shape[0]} channels")
    d = dilation
    _, t, h, w = x.shape
    xp = np.pad(x, ((0, 0), (d, d), (d, d), (d, d)))
    out = np.zeros((c_out, t, h, w), np.float32)
    for a in range(3):
        for b in range(3):
            for c in range(3):
                tap = kernel[:, :, a, b, c]
                if not tap.any():
                    continue
                win = xp[:, a * d:a * d + t, b * d:b * d + h, c * d:c * d + w]
                out += np.tensordot(tap, win, axes=(1, 0))
    return out + bias.astype(np.float32)[:, None, None, None]


def _pointwise(x, weight, bias=None) -> np.ndarray:
    out = np.tensordot(weight, x, axes=(1, 0))
    if bias is not None:
        out = out + bias[:, None, None, None]
    return out.astype(np.float32)


# --- branches -------------------------------------------------------------

def msdb_forward(x, w: BlockWeights, activate: bool = True) -> np.ndarray:
    """Three dilated 3x3x3 paths (d = 1, 2, 4), concatenated, fused 1x1x1."""
    x = _as_features(x)
    paths = [
        _act(conv3d(x, w[f"msdb.conv_d{d}.weight"], w[f"msdb.conv_d{d}.bias"], d), activate)
        for d in MSDB_DILATIONS
    ]
    return _pointwise(np.concatenate(paths, axis=0), w["msdb.fuse.weight"], w["msdb.fuse.bias"])


@dataclass(frozen=True)
class FebConfig:
    hidden_mult: int = 1
    normalize: bool = True
    norm_eps: float = 1e-5

    def __post_init__(self):
        if self.hidden_mult < 1:
            raise ValueError("hidden_mult must be >= 1")


def _feb_half(a, w: BlockWeights, cfg: FebConfig, activate: bool) -> np.ndarray:
    """Spectral filtering of the first channel half; returns the same shape."""
    h, width = a.shape[-2:]
    spec = np.fft.rfft2(a.astype(np.float64), axes=(-2, -1))
    if not np.all(np.isfinite(spec)):
        raise FloatingPointError("non-finite spectrum in frequency branch")
    z = np.concatenate([spec.real, spec.imag], axis=0).astype(np.float32)
    hid = _act(_pointwise(z, w["feb.fc1.weight"], w["feb.fc1.bias"]), activate)
    z = _pointwise(hid, w["feb.fc2.weight"], w["feb.fc2.bias"])
    half = a.shape[0]
    spec = z[:half].astype(np.float64) + 1j * z[half:].astype(np.float64)
    out = np.fft.irfft2(spec, s=(h, width), axes=(-2, -1))
    if cfg.normalize:
        mu = out.mean(axis=(-2, -1), keepdims=True)
        var = out.var(axis=(-2, -1), keepdims=True)
        out = (out - mu) / np.sqrt(var + cfg.norm_eps)
    return out.astype(np.float32)


def feb_forward(x, w: BlockWeights, cfg: FebConfig | None = None, activate: bool = True) -> np.ndarray:
    """Frequency enhancement on the first half of the channels.

    The first half goes through real FFT -> (real, imag) stacked on the
    channel axis -> shared two-layer pointwise MLP -> inverse real FFT ->
    optional per-(channel, frame) standardization. The second half passes
    through untouched.
    """
    cfg = cfg or FebConfig()
    x = _as_features(x)
    c = x.shape[0]
    if c % 2:
        raise ValueError(f"frequency branch needs an even channel count, got {c}")
    return np.concatenate([_feb_half(x[: c // 2], w, cfg, activate), x[c // 2:]], axis=0)


def scb_forward(x, w: BlockWeights, activate: bool = True) -> np.ndarray:
    x = _as_features(x)
    y = _act(conv3d(x, w["scb.conv1.weight"], w["scb.conv1.bias"]), activate)
    return conv3d(y, w["scb.conv2.weight"], w["scb.conv2.bias"])


def _softmax(s, axis=-1):
    s = s - s.max(axis=axis, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=axis, keepdims=True)


def tsab_attention(x, w: BlockWeights) -> np.ndarray:
    """Frame-to-frame attention weights, shape (H, W, T, T)."""
    x = _as_features(x)
    tokens = np.transpose(x, (2, 3, 1, 0)).astype(np.float64)  # (H, W, T, C)
    q = tokens @ w["tsab.query.weight"].T.astype(np.float64)
    k = tokens @ w["tsab.key.weight"].T.astype(np.float64)
    scores = q @ np.swapaxes(k, -1, -2) / np.sqrt(x.shape[0])
    return _softmax(scores)


def tsab_forward(x, w: BlockWeights) -> np.ndarray:
    """Temporal self-attention with one token per frame at every pixel.

    Weights act on the channel axis only, so any number of frames works.
    """
    x = _as_features(x)
    tokens = np.transpose(x, (2, 3, 1, 0)).astype(np.float64)
    attn = tsab_attention(x, w)
    v = tokens @ w["tsab.value.weight"].T.astype(np.float64)
    out = (attn @ v) @ w["tsab.out.weight"].T.astype(np.float64)
    return np.transpose(out, (3, 2, 0, 1)).astype(np.float32)


def ffn_forward(x, w: BlockWeights, activate: bool = True) -> np.ndarray:
    h = _act(_pointwise(x, w["ffn.fc1.weight"], w["ffn.fc1.bias"]), activate)
    return _pointwise(h, w["ffn.fc2.weight"], w["ffn.fc2.bias"])


def robust_cformer_forward(x, w: BlockWeights, cfg: FebConfig | None = None,
                           activate: bool = True) -> np.ndarray:
    """Full block: residual + ST-baseline + deblur + frequency, then FFN.

    The frequency branch contributes only its filtered half; the untouched
    half is already carried by the block's own input residual.
    """
    cfg = cfg or FebConfig()
    x = _as_features(x)
    c = x.shape[0]
    if c % 2:
        raise ValueError(f"block needs an even channel count, got {c}")
    st = tsab_forward(scb_forward(x, w, activate), w)
    freq = np.zeros_like(x)
    freq[: c // 2] = _feb_half(x[: c // 2], w, cfg, activate)
    fused = x + st + msdb_forward(x, w, activate) + freq
    return (fused + ffn_forward(fused, w, activate)).astype(np.float32)


# --- diagnostics ----------------------------------------------------------

def half_spectrum_energy(spec, width: int) -> float:
    """Total energy of a real signal from its half spectrum, divided by H*W.

    Interior bins stand in for their conjugate partners and count twice;
    the DC bin and, for even widths, the Nyquist bin count once.
    """
    spec = np.asarray(spec)
    weights = np.full(spec.shape[-1], 2.0)
    weights[0] = 1.0
    if width % 2 == 0:
        weights[-1] = 1.0
    h = spec.shape[-2]
    return float((np.abs(spec) ** 2 * weights).sum() / (h * width))


def _dirac(c):
    k = np.zeros((c, c, 3, 3, 3), np.float32)
    for i in range(c):
        k[i, i, 1, 1, 1] = 1.0
    return k


def selftest(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Run the block invariants; returns ``(name, passed, detail)`` rows."""
    rng = np.random.default_rng(seed)
    rows = []

    def check(name, value, tol):
        rows.append((name, bool(value <= tol), f"{value:.3e} <= {tol:.0e}"))

    c = 4
    x = rng.standard_normal((c, 3, 8, 8)).astype(np.float32)
    eye = np.eye(c, dtype=np.float32)

    w = BlockWeights.zeros(c)
    ident = w.replace(**{f"msdb__conv_d{d}__weight": _dirac(c) for d in MSDB_DILATIONS},
                      msdb__fuse__weight=np.concatenate([eye, eye, eye], axis=1) / 3)
    check("msdb identity configuration", np.abs(msdb_forward(x, ident, activate=False) - x).max(), 1e-5)

    ident = w.replace(feb__fc1__weight=eye, feb__fc2__weight=eye)
    out = feb_forward(x, ident, FebConfig(normalize=False), activate=False)
    check("feb identity configuration", np.abs(out - x).max(), 1e-5)

    check("block zero-weight identity", np.abs(robust_cformer_forward(x, w) - x).max(), 1e-5)

    for h, width in ((7, 9), (16, 16), (5, 32)):
        f = rng.standard_normal((h, width))
        spec = np.fft.rfft2(f)
        err = abs(half_spectrum_energy(spec, width) - (f ** 2).sum()) / (f ** 2).sum()
        check(f"parseval {h}x{width}", err, 1e-6)
        check(f"rfft round trip {h}x{width}", np.abs(np.fft.irfft2(spec, s=(h, width)) - f).max(), 1e-5)

    ws = seed_weights(seed, c)
    for t in (1, 8, 16, 24):
        xt = rng.standard_normal((c, t, 4, 4)).astype(np.float32)
        a = tsab_attention(xt, ws)
        check(f"tsab rows sum to one (T={t})", np.abs(a.sum(-1) - 1).max(), 1e-6)
        rows.append((f"tsab shape preserved (T={t})", tsab_forward(xt, ws).shape == xt.shape, str(xt.shape)))

    big = (rng.standard_normal((c, 4, 8, 8)) * 1e3).astype(np.float32)
    out = robust_cformer_forward(big, ws)
    rows.append(("block finite on large inputs", bool(np.all(np.isfinite(out))), "no NaN/Inf"))
    return rows
