"""Data model, seeded randomness and on-disk formats.

Video cubes, masks and measurements are plain ``float32`` numpy arrays:
a cube is ``(T, H, W)``, a frame ``(H, W)``. The helpers here validate
shapes and handle the two interchange formats, 8-bit PGM (P5) for frames
and the SCIB container for everything else.
"""

from __future__ import annotations

import hashlib
import json
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

__all__ = [
    "FormatError",
    "SeededRng",
    "RNG_ALGORITHM",
    "as_cube",
    "as_frame",
    "chunk_video",
    "load_frame_dir",
    "read_pgm",
    "write_pgm",
    "save_cube",
    "load_cube",
    "write_manifest",
    "file_sha256",
    "TOOL_VERSION",
]

TOOL_VERSION = "0.1.0"  # keep in sync with sci_forge.__version__
RNG_ALGORITHM = "numpy.PCG64"

SCIB_MAGIC = b"SCIB"
SCIB_VERSION = 1


class FormatError(ValueError):
    """Raised when a file does not follow the PGM or SCIB layout."""


@dataclass(frozen=True)
class SeededRng:
    """Immutable handle on a PCG64 stream.

    ``generator()`` always restarts the stream, so the same handle yields
    the same draws every time. ``child(*key)`` derives an independent
    stream, e.g. per ground-truth center or per benchmark job, so results
    do not depend on the order in which jobs run.
    """

    seed: int
    key: tuple[int, ...] = ()

    algorithm = RNG_ALGORITHM

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *key: int | str) -> "SeededRng":
        return SeededRng(self.seed, self.key + tuple(_key_int(k) for k in key))

    def derive_seed(self) -> int:
        """A 64-bit seed summarising this stream (for manifests)."""
        ss = np.random.SeedSequence(int(self.seed), spawn_key=self.key)
        return int(ss.generate_state(1, dtype=np.uint64)[0])


def _key_int(k: int | str) -> int:
    if isinstance(k, str):
        return int.from_bytes(hashlib.sha256(k.encode()).digest()[:8], "little")
    if k < 0:
        raise ValueError("rng keys must be non-negative")
    return int(k)


def as_cube(x, name: str = "cube", dtype=np.float32) -> np.ndarray:
    a = np.asarray(x, dtype=dtype)
    if a.ndim != 3 or min(a.shape) < 1:
        raise ValueError(f"{name} must be a non-empty (T, H, W) array, got shape {a.shape}")
    return a


def as_frame(x, name: str = "frame", dtype=np.float32) -> np.ndarray:
    a = np.asarray(x, dtype=dtype)
    if a.ndim != 2 or min(a.shape) < 1:
        raise ValueError(f"{name} must be a non-empty (H, W) array, got shape {a.shape}")
    return a


def chunk_video(cube, chunk_len: int) -> tuple[list[np.ndarray], int]:
    """Split a cube into consecutive chunks of ``chunk_len`` frames.

    Returns the list of chunks and the number of trailing frames dropped
    because they do not fill a whole chunk.
    """
    cube = as_cube(cube)
    if chunk_len < 1:
        raise ValueError("chunk_len must be >= 1")
    n = cube.shape[0] // chunk_len
    chunks = [cube[i * chunk_len:(i + 1) * chunk_len] for i in range(n)]
    return chunks, cube.shape[0] - n * chunk_len


# --- PGM ---------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit binary PGM and return values scaled by 1/255."""
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise FormatError(f"{path}: not a binary (P5) PGM")
    pos = 2
    fields = []
    for _ in range(3):
        m = _PGM_TOKEN.match(data, pos)
        if m is None:
            raise FormatError(f"{path}: truncated PGM header")
        fields.append(int(m.group(1)))
        pos = m.end()
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit PGM (maxval 255) is supported, got {maxval}")
    pos += 1  # single whitespace byte before raster
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise FormatError(f"{path}: truncated PGM raster")
    img = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return img.astype(np.float32) / np.float32(255.0)


def write_pgm(path, frame) -> None:
    """Write a [0, 1] frame as 8-bit P5, rounding to the nearest level."""
    f = as_frame(frame)
    px = np.clip(np.rint(f.astype(np.float64) * 255.0), 0, 255).astype(np.uint8)
    h, w = px.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + px.tobytes())


def _natural_key(name: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


def load_frame_dir(path, pattern: str = "*.pgm") -> np.ndarray:
    """Load every PGM in ``path`` matching ``pattern`` into a (T, H, W) cube.

    Files are ordered by natural filename order, so ``f2`` precedes ``f10``
    and zero-padded names sort lexicographically as usual.
    """
    d = Path(path)
    if not d.is_dir():
        raise FileNotFoundError(f"frame directory not found: {d}")
    files = sorted((p for p in d.glob(pattern) if p.is_file()), key=lambda p: _natural_key(p.name))
    if not files:
        raise FileNotFoundError(f"no files matching {pattern!r} in {d}")
    frames = [read_pgm(p) for p in files]
    shape = frames[0].shape
    for p, fr in zip(files, frames):
        if fr.shape != shape:
            raise FormatError(f"{p.name}: size {fr.shape} differs from {shape}")
    return np.stack(frames)


# --- SCIB container ------------------------------------------------------

def save_cube(cube, path) -> None:
    """Write an array of any rank as a SCIB container (little-endian float32)."""
    a = np.ascontiguousarray(np.asarray(cube, dtype="<f4"))
    header = SCIB_MAGIC + struct.pack("<II", SCIB_VERSION, a.ndim)
    header += struct.pack(f"<{a.ndim}I", *a.shape)
    Path(path).write_bytes(header + a.tobytes())


def load_cube(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise FormatError(f"{path}: too short for a SCIB header")
    if data[:4] != SCIB_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    version, ndim = struct.unpack_from("<II", data, 4)
    if version != SCIB_VERSION:
        raise FormatError(f"{path}: unsupported SCIB version {version}")
    off = 12 + 4 * ndim
    if len(data) < off:
        raise FormatError(f"{path}: truncated dims")
    dims = struct.unpack_from(f"<{ndim}I", data, 12)
    expected = int(np.prod(dims, dtype=np.int64)) * 4
    payload = data[off:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, header dims {dims} need {expected} (truncated or padded)"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)


# --- manifests -----------------------------------------------------------

def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(v: Any):
    if isinstance(v, float) and not np.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, (np.floating,)):
        return _jsonable(float(v))
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Path):
        return str(v)
    return v


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_manifest(artifact, params: dict, seed: int | None = None,
                   files: Sequence | None = None) -> Path:
    """Write ``<artifact>.manifest.json`` next to a generated file."""
    artifact = Path(artifact)
    record = {
        "tool": "sci-forge",
        "tool_version": TOOL_VERSION,
        "rng_algorithm": RNG_ALGORITHM,
        "seed": seed,
        "params": params,
    }
    if artifact.exists() and artifact.is_file():
        record["sha256"] = file_sha256(artifact)
    if files:
        record["files"] = {Path(f).name: file_sha256(f) for f in files}
    out = artifact.with_name(artifact.name + ".manifest.json")
    dump_json(record, out)
    return out
