import hashlib
import json
import random
import struct
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sci_forge.core import (FormatError, SeededRng, chunk_video, load_cube, load_frame_dir,
                            read_pgm, save_cube, write_manifest, write_pgm)


def _raw_pgm(path, pixels):
    h, w = pixels.shape
    path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + pixels.astype(np.uint8).tobytes())


class TestFrameDir:
    def test_all_zero_frames(self, tmp_path):
        for i in range(8):
            _raw_pgm(tmp_path / f"f{i:02d}.pgm", np.zeros((4, 4)))
        cube = load_frame_dir(tmp_path)
        assert cube.shape == (8, 4, 4)
        assert cube.dtype == np.float32
        assert not cube.any()

    def test_value_mapping(self, tmp_path):
        _raw_pgm(tmp_path / "a.pgm", np.array([[255, 128], [0, 1]]))
        cube = load_frame_dir(tmp_path)
        assert cube[0, 0, 0] == 1.0
        assert cube[0, 0, 1] == np.float32(128 / 255.0)
        assert abs(cube[0, 0, 1] - 0.50196) < 1e-5
        assert cube[0, 1, 1] == np.float32(1 / 255.0)

    def test_every_level_is_affine(self, tmp_path):
        _raw_pgm(tmp_path / "a.pgm", np.arange(256).reshape(16, 16))
        got = read_pgm(tmp_path / "a.pgm").ravel()
        np.testing.assert_array_equal(got, np.arange(256, dtype=np.float32) / np.float32(255))

    def test_shuffled_files_load_in_name_order(self, tmp_path):
        names = [f"f{i:02d}.pgm" for i in range(1, 11)]
        order = names[:]
        random.Random(3).shuffle(order)
        for name in order:  # creation order differs from name order
            idx = int(name[1:3])
            _raw_pgm(tmp_path / name, np.full((2, 2), idx))
        cube = load_frame_dir(tmp_path)
        np.testing.assert_array_equal(cube[:, 0, 0] * 255, np.arange(1, 11))

    def test_natural_sort_without_padding(self, tmp_path):
        for i in (1, 2, 10, 11):
            _raw_pgm(tmp_path / f"frame{i}.pgm", np.full((2, 2), i))
        cube = load_frame_dir(tmp_path)
        np.testing.assert_allclose(cube[:, 0, 0] * 255, [1, 2, 10, 11], atol=1e-4)

    def test_header_comments(self, tmp_path):
        (tmp_path / "c.pgm").write_bytes(b"P5\n# made by hand\n2 1\n255\n" + bytes([0, 255]))
        np.testing.assert_array_equal(read_pgm(tmp_path / "c.pgm"), [[0.0, 1.0]])

    def test_missing_dir(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_frame_dir(tmp_path / "nope")

    def test_zero_matches(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_frame_dir(tmp_path)

    def test_mixed_dimensions(self, tmp_path):
        _raw_pgm(tmp_path / "a.pgm", np.zeros((4, 4)))
        _raw_pgm(tmp_path / "b.pgm", np.zeros((4, 5)))
        with pytest.raises(FormatError):
            load_frame_dir(tmp_path)

    def test_rejects_ascii_pgm(self, tmp_path):
        (tmp_path / "a.pgm").write_bytes(b"P2\n2 2\n255\n0 0 0 0\n")
        with pytest.raises(FormatError):
            load_frame_dir(tmp_path)

    def test_write_read_round_trip(self, tmp_path):
        levels = np.arange(64, dtype=np.float32).reshape(8, 8) * 4 / 255
        write_pgm(tmp_path / "x.pgm", levels)
        np.testing.assert_array_equal(read_pgm(tmp_path / "x.pgm"), levels)


class TestScib:
    def test_round_trip_is_bit_exact(self, tmp_path):
        cube = np.random.default_rng(0).random((3, 5, 7)).astype(np.float32)
        save_cube(cube, tmp_path / "c.scib")
        back = load_cube(tmp_path / "c.scib")
        assert back.shape == cube.shape
        assert back.tobytes() == cube.tobytes()

    def test_header_layout(self, tmp_path):
        save_cube(np.zeros((2, 3, 4), np.float32), tmp_path / "c.scib")
        data = (tmp_path / "c.scib").read_bytes()
        assert data[:4] == b"SCIB"
        assert struct.unpack_from("<5I", data, 4) == (1, 3, 2, 3, 4)
        assert len(data) == 4 + 4 * 5 + 24 * 4

    def test_empty_file(self, tmp_path):
        (tmp_path / "e.scib").write_bytes(b"")
        with pytest.raises(FormatError):
            load_cube(tmp_path / "e.scib")

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "t.scib"
        path.write_bytes(b"SCIB" + struct.pack("<5I", 1, 3, 2, 2, 2) + np.zeros(7, "<f4").tobytes())
        with pytest.raises(FormatError, match="truncated"):
            load_cube(path)

    def test_bad_magic_and_version(self, tmp_path):
        good = b"SCIB" + struct.pack("<3I", 1, 1, 1) + np.zeros(1, "<f4").tobytes()
        (tmp_path / "m.scib").write_bytes(b"SCIX" + good[4:])
        with pytest.raises(FormatError, match="magic"):
            load_cube(tmp_path / "m.scib")
        (tmp_path / "v.scib").write_bytes(b"SCIB" + struct.pack("<3I", 2, 1, 1) + good[16:])
        with pytest.raises(FormatError, match="version"):
            load_cube(tmp_path / "v.scib")

    @settings(max_examples=40, deadline=None)
    @given(st.tuples(st.integers(1, 16), st.integers(1, 64), st.integers(1, 64)), st.integers(0, 2**32 - 1))
    def test_round_trip_property(self, tmp_path_factory, shape, seed):
        cube = np.random.default_rng(seed).standard_normal(shape).astype(np.float32)
        path = tmp_path_factory.mktemp("scib") / "c.scib"
        save_cube(cube, path)
        assert load_cube(path).tobytes() == cube.tobytes()


class TestChunking:
    @pytest.mark.parametrize("t, n_chunks, dropped", [(24, 3, 0), (10, 1, 2), (7, 0, 7)])
    def test_counts(self, t, n_chunks, dropped):
        cube = np.arange(t * 4, dtype=np.float32).reshape(t, 2, 2)
        chunks, tail = chunk_video(cube, 8)
        assert len(chunks) == n_chunks and tail == dropped
        if chunks:
            np.testing.assert_array_equal(np.concatenate(chunks), cube[: t - dropped])

    def test_zero_chunk_len(self):
        with pytest.raises(ValueError):
            chunk_video(np.zeros((4, 2, 2)), 0)


class TestSeededRng:
    def test_same_seed_same_draws(self):
        a = SeededRng(42).generator().standard_normal(100)
        b = SeededRng(42).generator().standard_normal(100)
        assert a.tobytes() == b.tobytes()

    def test_children_are_independent_of_order(self):
        r = SeededRng(7)
        first = r.child(3).generator().random(5)
        r.child(1).generator().random(5)
        assert r.child(3).generator().random(5).tobytes() == first.tobytes()
        assert r.child(1).generator().random(5).tobytes() != first.tobytes()

    def test_string_keys(self):
        r = SeededRng(1)
        assert r.child("video").generator().random() == r.child("video").generator().random()

    def test_rejects_out_of_range_seed(self):
        with pytest.raises(ValueError):
            SeededRng(-1)
        with pytest.raises(ValueError):
            SeededRng(2**64)

    def test_digest_stable_across_processes(self):
        code = ("import hashlib;from sci_forge.core import SeededRng;"
                "print(hashlib.sha256(SeededRng(12345).generator().standard_normal(1000).tobytes()).hexdigest())")
        runs = [subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout
                for _ in range(2)]
        local = hashlib.sha256(SeededRng(12345).generator().standard_normal(1000).tobytes()).hexdigest()
        assert runs[0].strip() == runs[1].strip() == local


def test_manifest_records_seed_and_hash(tmp_path):
    save_cube(np.ones((1, 2, 2)), tmp_path / "x.scib")
    out = write_manifest(tmp_path / "x.scib", {"alpha": 0.5, "psnr": float("inf")}, seed=9)
    m = json.loads(out.read_text())
    assert out.name == "x.scib.manifest.json"
    assert m["seed"] == 9 and m["rng_algorithm"] == "numpy.PCG64"
    assert m["params"]["psnr"] == "inf"
    assert len(m["sha256"]) == 64
