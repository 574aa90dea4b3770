import numpy as np
import pytest

from gatedcrf.energy import (
    AttentionMaps,
    KernelBank,
    LatentFeatures,
    MultiScaleFeatures,
    attention_smoothing_energy,
    pairwise_energy,
    total_energy,
    unary_energy,
)
from gatedcrf.tensor_ops import ShapeError

from oracles import pairwise_energy_loops, smoothing_energy_loops, unary_energy_loops


def random_instance(seed, scales=2, channels=2, h=3, w=3, k_scale=0.5):
    rng = np.random.default_rng(seed)
    X = MultiScaleFeatures([rng.standard_normal((channels, h, w)) for _ in range(scales)])
    Y = LatentFeatures([rng.standard_normal((channels, h, w)) for _ in range(scales)])
    A = AttentionMaps([rng.uniform(0, 1, (1, h, w)) for _ in range(scales - 1)])
    bank = KernelBank.random(rng, scales, channels, k_scale=k_scale, beta_scale=k_scale)
    return X, Y, A, bank


class TestDomainTypes:
    def test_scale_count_validated(self):
        with pytest.raises(ShapeError):
            MultiScaleFeatures([np.zeros((1, 2, 2))])

    def test_mismatched_scales_rejected(self):
        with pytest.raises(ShapeError):
            MultiScaleFeatures([np.zeros((1, 2, 2)), np.zeros((1, 3, 2))])

    def test_attention_single_channel(self):
        with pytest.raises(ShapeError):
            AttentionMaps([np.zeros((2, 2, 2))])

    def test_kernel_bank_shapes(self):
        with pytest.raises(ShapeError):
            KernelBank(K=[np.zeros((2, 2, 5, 5))], beta=[np.zeros((1, 1, 3, 3))])
        with pytest.raises(ShapeError):
            KernelBank(K=[np.zeros((2, 3, 3, 3))], beta=[np.zeros((1, 1, 3, 3))])
        with pytest.raises(ShapeError):
            KernelBank(K=[np.zeros((2, 2, 3, 3))], beta=[])


class TestUnary:
    def test_zero_residual(self):
        X, _, _, _ = random_instance(0)
        assert unary_energy(LatentFeatures(list(X.scales)), X) == 0.0

    def test_single_pixel(self):
        X = MultiScaleFeatures([np.zeros((1, 1, 1)), np.zeros((1, 1, 1))])
        Y = LatentFeatures([np.full((1, 1, 1), 2.0), np.zeros((1, 1, 1))])
        assert unary_energy(Y, X) == -2.0

    def test_matches_oracle(self):
        X, Y, _, _ = random_instance(1)
        assert abs(unary_energy(Y, X) - unary_energy_loops(Y.scales, X.scales)) < 1e-10

    def test_shape_mismatch(self):
        X, _, _, _ = random_instance(2)
        Y = LatentFeatures([np.zeros((1, 3, 3)), np.zeros((1, 3, 3))])
        with pytest.raises(ShapeError):
            unary_energy(Y, X)


class TestPairwise:
    def test_closed_gate(self):
        _, Y, _, bank = random_instance(3)
        A0 = AttentionMaps([np.zeros((1, 3, 3))])
        assert pairwise_energy(Y, A0, bank) == 0.0

    def test_zero_kernels(self):
        _, Y, A, _ = random_instance(4)
        assert pairwise_energy(Y, A, KernelBank.zeros(2, 2)) == 0.0

    def test_hand_set_2x2_matches_bruteforce(self):
        rng = np.random.default_rng(5)
        Y = LatentFeatures([rng.standard_normal((1, 2, 2)) for _ in range(2)])
        A = AttentionMaps([rng.uniform(0, 1, (1, 2, 2))])
        bank = KernelBank.random(rng, 2, 1, k_scale=1.0)
        got = pairwise_energy(Y, A, bank)
        want = pairwise_energy_loops(Y.scales, A.maps, bank.K)
        assert abs(got - want) < 1e-12

    def test_linear_in_attention(self):
        _, Y, A, bank = random_instance(6)
        base = pairwise_energy(Y, A, bank)
        scaled = pairwise_energy(
            Y, AttentionMaps([2.5 * a for a in A.maps]), bank
        )
        assert abs(scaled - 2.5 * base) < 1e-10

    def test_bilinear_in_features(self):
        X, Y, A, bank = random_instance(7)
        zeroed_ref = LatentFeatures(Y.scales[:-1] + [np.zeros_like(Y.scales[-1])])
        assert pairwise_energy(zeroed_ref, A, bank) == 0.0
        zeroed_mid = LatentFeatures([np.zeros_like(Y.scales[0]), Y.scales[-1]])
        assert pairwise_energy(zeroed_mid, A, bank) == 0.0


class TestSmoothing:
    def test_zeros(self):
        _, _, A, bank = random_instance(8)
        assert attention_smoothing_energy(AttentionMaps([np.zeros((1, 3, 3))]), bank) == 0.0
        assert attention_smoothing_energy(A, KernelBank.zeros(2, 2)) == 0.0

    def test_ones_3x3_neighborhood_count(self):
        # padded 3x3 neighborhoods on a 3x3 grid: 4 corners * 4 + 4 edges * 6 + 9
        A = AttentionMaps([np.ones((1, 3, 3))])
        bank = KernelBank(K=[np.zeros((1, 1, 3, 3))], beta=[np.ones((1, 1, 3, 3))])
        assert attention_smoothing_energy(A, bank) == 49.0

    def test_matches_oracle(self):
        _, _, A, bank = random_instance(9)
        got = attention_smoothing_energy(A, bank)
        assert abs(got - smoothing_energy_loops(A.maps, bank.beta)) < 1e-12


class TestTotal:
    def test_all_terms_vanish(self):
        X, _, _, bank = random_instance(10)
        Y = LatentFeatures(list(X.scales))
        A0 = AttentionMaps([np.zeros((1, 3, 3))])
        for b in (KernelBank.zeros(2, 2), bank):  # quadratic in a: beta irrelevant
            e = total_energy(Y, A0, X, b)
            assert (e.unary, e.pairwise, e.attention_smoothing, e.total) == (0, 0, 0, 0)

    def test_total_is_exact_sum(self):
        X, Y, A, bank = random_instance(11)
        e = total_energy(Y, A, X, bank)
        assert e.total == e.unary + e.pairwise + e.attention_smoothing

    def test_matches_sum_of_oracles(self):
        X, Y, A, bank = random_instance(12)
        e = total_energy(Y, A, X, bank)
        want = (
            unary_energy_loops(Y.scales, X.scales)
            + pairwise_energy_loops(Y.scales, A.maps, bank.K)
            + smoothing_energy_loops(A.maps, bank.beta)
        )
        assert abs(e.total - want) < 1e-10

    def test_binary_attention_supported(self):
        X, Y, _, bank = random_instance(13)
        rng = np.random.default_rng(14)
        A_bin = AttentionMaps([rng.integers(0, 2, (1, 3, 3)).astype(np.float64)])
        e = total_energy(Y, A_bin, X, bank)
        want = pairwise_energy_loops(Y.scales, A_bin.maps, bank.K)
        assert abs(e.pairwise - want) < 1e-10
