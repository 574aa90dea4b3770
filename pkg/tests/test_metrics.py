import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gatedcrf.metrics import DepthMap, compute_metrics, metrics_over_maps
from gatedcrf.tensor_ops import ShapeError

from oracles import metrics_loops

positive = st.floats(0.05, 50, allow_nan=False, allow_infinity=False)


def depth_pairs():
    return st.tuples(st.integers(1, 4), st.integers(1, 4)).flatmap(
        lambda hw: st.tuples(
            arrays(np.float64, (1,) + hw, elements=positive),
            arrays(np.float64, (1,) + hw, elements=positive),
        )
    )


class TestCraftedCases:
    def test_perfect_prediction(self):
        gt = np.full((1, 3, 3), 2.5)
        m = compute_metrics(gt, gt)
        assert m.rel == 0.0 and m.rms == 0.0 and m.log10 == 0.0
        assert m.delta1 == m.delta2 == m.delta3 == 1.0

    def test_constant_1_vs_1_3(self):
        gt = np.ones((1, 2, 2))
        pred = np.full((1, 2, 2), 1.3)
        m = compute_metrics(pred, gt)
        assert abs(m.rel - 0.3) < 1e-12
        assert m.delta1 == 0.0  # 1.3 > 1.25
        assert m.delta2 == 1.0  # 1.3 < 1.5625

    def test_constant_2_vs_1(self):
        gt = np.full((1, 2, 2), 2.0)
        pred = np.ones((1, 2, 2))
        m = compute_metrics(pred, gt)
        assert abs(m.rel - 0.5) < 1e-12
        assert abs(m.rms - 1.0) < 1e-12
        assert abs(m.log10 - np.log10(2.0)) < 1e-12
        assert m.delta1 == 0.0


class TestValidation:
    def test_non_positive_named_pixel(self):
        gt = np.ones((1, 2, 2))
        pred = np.ones((1, 2, 2))
        pred[0, 1, 0] = -0.5
        with pytest.raises(ValueError, match="pixel index 2"):
            compute_metrics(pred, gt)
        with pytest.raises(ValueError, match="pixel index"):
            compute_metrics(gt, pred)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            compute_metrics(np.ones((1, 2, 2)), np.ones((1, 2, 3)))

    def test_depthmap_type_validates(self):
        with pytest.raises(ValueError):
            DepthMap(np.zeros((1, 2, 2)))
        with pytest.raises(ShapeError):
            DepthMap(np.ones((2, 2)))
        dm = DepthMap(np.ones((1, 2, 2)))
        m = compute_metrics(dm, dm)
        assert m.rms == 0.0


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(depth_pairs())
    def test_delta_nesting(self, pair):
        pred, gt = pair
        m = compute_metrics(pred, gt)
        assert m.delta1 <= m.delta2 <= m.delta3

    @settings(max_examples=30, deadline=None)
    @given(depth_pairs())
    def test_delta_symmetry(self, pair):
        pred, gt = pair
        a = compute_metrics(pred, gt)
        b = compute_metrics(gt, pred)
        assert (a.delta1, a.delta2, a.delta3) == (b.delta1, b.delta2, b.delta3)

    def test_rel_not_symmetric(self):
        gt = np.full((1, 1, 1), 2.0)
        pred = np.ones((1, 1, 1))
        assert compute_metrics(pred, gt).rel != compute_metrics(gt, pred).rel

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            pred = rng.uniform(0.2, 9.0, (1, 4, 5))
            gt = rng.uniform(0.2, 9.0, (1, 4, 5))
            m = compute_metrics(pred, gt)
            want = metrics_loops(pred, gt)
            got = (m.rel, m.rms, m.log10, m.delta1, m.delta2, m.delta3)
            assert np.allclose(got, want, atol=1e-12)


def test_metrics_over_maps_pools_pixels():
    rng = np.random.default_rng(1)
    preds = [rng.uniform(1, 5, (1, 2, 2)) for _ in range(3)]
    gts = [rng.uniform(1, 5, (1, 2, 2)) for _ in range(3)]
    pooled = metrics_over_maps(preds, gts)
    direct = compute_metrics(
        np.concatenate([p.reshape(-1) for p in preds]).reshape(1, 1, -1),
        np.concatenate([g.reshape(-1) for g in gts]).reshape(1, 1, -1),
    )
    assert pooled == direct
