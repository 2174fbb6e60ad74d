import numpy as np
import pytest

from oracles import sensing_matrix
from sci_forge.cacti import adjoint, encode, forward, generate_masks, mask_energy
from sci_forge.core import SeededRng


class TestMasks:
    def test_density(self):
        m = generate_masks(8, 256, 256, 0.5, SeededRng(0).generator())
        assert set(np.unique(m)) == {0.0, 1.0}
        # binomial std of the fraction is ~0.0005, so 0.01 is a 20-sigma band
        assert abs(m.mean() - 0.5) <= 0.01

    def test_deterministic(self):
        a = generate_masks(8, 32, 32, 0.5, SeededRng(9).generator())
        b = generate_masks(8, 32, 32, 0.5, SeededRng(9).generator())
        assert a.tobytes() == b.tobytes()

    def test_single_layer(self):
        assert generate_masks(1, 5, 6, 0.5).shape == (1, 5, 6)

    @pytest.mark.parametrize("density", [0.0, 1.0, -0.1, 1.5])
    def test_density_out_of_range(self, density):
        with pytest.raises(ValueError):
            generate_masks(2, 4, 4, density)


class TestEncode:
    def test_all_ones_is_temporal_sum(self):
        x = np.random.default_rng(0).random((8, 6, 6)).astype(np.float32)
        y = encode(x, np.ones_like(x))
        np.testing.assert_allclose(y, x.sum(0, dtype=np.float64), atol=1e-6)

    def test_all_zero_masks(self):
        x = np.random.default_rng(0).random((4, 6, 6))
        assert not encode(x, np.zeros((4, 6, 6))).any()

    def test_hand_example(self):
        x = np.array([[[.1, .2], [.3, .4]], [[.5, .6], [.7, .8]]], np.float32)
        m = np.array([[[1, 0], [0, 1]], [[0, 1], [1, 0]]], np.float32)
        np.testing.assert_allclose(encode(x, m), [[.1, .6], [.7, .4]], atol=1e-7)

    def test_matches_explicit_sensing_matrix(self):
        g = np.random.default_rng(2)
        x = g.random((5, 7, 9))
        m = (g.random((5, 7, 9)) < 0.5).astype(np.float32)
        ref = (sensing_matrix(m) @ x.ravel()).reshape(7, 9)
        np.testing.assert_allclose(encode(x, m), ref, atol=1e-5)

    def test_linear(self):
        g = np.random.default_rng(3)
        x, z = g.random((2, 8, 16, 16)).astype(np.float32)
        m = generate_masks(8, 16, 16, 0.5, g)
        a, b = 0.7, -1.3
        np.testing.assert_allclose(encode(a * x + b * z, m), a * encode(x, m) + b * encode(z, m), atol=1e-5)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            encode(np.zeros((4, 5, 5)), np.zeros((8, 5, 5)))
        with pytest.raises(ValueError):
            encode(np.zeros((4, 5, 5)), np.zeros((4, 5, 6)))

    def test_measurement_noise(self):
        x = np.full((8, 200, 200), 0.5, np.float32)
        m = np.ones_like(x)
        y = encode(x, m, 0.1, SeededRng(1).generator())
        assert abs((y - 4.0).std() - 0.1) < 0.005
        assert encode(x, m, 0.1, SeededRng(1).generator()).tobytes() == y.tobytes()

    def test_unclamped(self):
        x = np.ones((8, 2, 2), np.float32)
        assert encode(x, np.ones_like(x)).max() == 8.0


class TestAdjoint:
    def test_all_ones_broadcasts(self):
        y = np.random.default_rng(0).random((4, 4)).astype(np.float32)
        out = adjoint(y, np.ones((3, 4, 4)))
        for k in range(3):
            np.testing.assert_array_equal(out[k], y)

    def test_zero_measurement(self):
        assert not adjoint(np.zeros((4, 4)), np.ones((3, 4, 4))).any()

    def test_matches_transpose_matrix(self):
        g = np.random.default_rng(4)
        m = (g.random((3, 5, 6)) < 0.5).astype(np.float32)
        y = g.random((5, 6))
        ref = (sensing_matrix(m).T @ y.ravel()).reshape(3, 5, 6)
        np.testing.assert_allclose(adjoint(y, m), ref, atol=1e-6)

    def test_inner_product_identity(self):
        g = np.random.default_rng(5)
        for _ in range(100):
            t, h, w = g.integers(1, 10), g.integers(1, 20), g.integers(1, 20)
            x = g.random((t, h, w)).astype(np.float32)
            y = g.random((h, w)).astype(np.float32)
            m = (g.random((t, h, w)) < 0.5).astype(np.float32)
            lhs = float(np.vdot(encode(x, m).astype(np.float64), y))
            rhs = float(np.vdot(x.astype(np.float64), adjoint(y, m)))
            assert abs(lhs - rhs) <= 1e-5 * max(abs(lhs), 1e-12)

    def test_forward_of_adjoint_scales_by_energy(self):
        g = np.random.default_rng(6)
        m = generate_masks(8, 12, 12, 0.5, g)
        y = g.random((12, 12)).astype(np.float32)
        e, _ = mask_energy(m)
        np.testing.assert_allclose(forward(adjoint(y, m), m), e * y, atol=1e-6)


class TestEnergy:
    def test_all_ones(self):
        e, flags = mask_energy(np.ones((8, 5, 5)))
        np.testing.assert_array_equal(e, 8)
        assert not flags.any()

    def test_all_zero(self):
        e, flags = mask_energy(np.zeros((8, 5, 5)))
        assert not e.any() and flags.all()

    def test_bernoulli_counts(self):
        e, _ = mask_energy(generate_masks(8, 128, 128, 0.5, SeededRng(2).generator()))
        assert set(np.unique(e)).issubset(set(range(9)))
        # pixel counts are Binomial(8, 0.5): mean 4, std sqrt(2); std of the mean ~0.011
        assert abs(e.mean() - 4.0) < 0.06
