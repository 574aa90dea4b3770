"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s`. Criteria are property- and
oracle-based; headline benchmark magnitudes from full-scale systems are out
of scope by design.
"""

import time

import numpy as np

from gatedcrf.ablation import AblationSpec, ordering_violations, run_ablation
from gatedcrf.bench import bench_meanfield
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
from gatedcrf.gradcheck import check_crf_gradients, check_model_gradients
from gatedcrf.meanfield import InferenceConfig, run_inference
from gatedcrf.metrics import compute_metrics
from gatedcrf.model import ToyConfig, ToyModel
from gatedcrf.synthetic import SceneSpec, generate_dataset
from gatedcrf.train import TrainConfig, train

from oracles import (
    pairwise_energy_loops,
    schedule_loops,
    smoothing_energy_loops,
    unary_energy_loops,
)


def report(num: int, name: str, detail: str) -> None:
    print(f"\nACCEPTANCE {num} [pass] {name}: {detail}")


def random_family(rng):
    scales = int(rng.integers(2, 4))
    channels = int(rng.integers(1, 3))
    h = int(rng.integers(1, 6))
    w = int(rng.integers(1, 6))
    X = MultiScaleFeatures(
        [rng.standard_normal((channels, h, w)) for _ in range(scales)]
    )
    bank = KernelBank.random(rng, scales, channels, k_scale=0.3, beta_scale=0.3)
    return X, bank


def test_criterion_1_inference_oracle_equivalence():
    rng = np.random.default_rng(101)
    t0 = time.monotonic()
    worst = 0.0
    for _ in range(50):
        X, bank = random_family(rng)
        iterations = int(rng.integers(1, 4))
        state = run_inference(X, bank, InferenceConfig(iterations=iterations))
        want_Y, want_A = schedule_loops(
            [np.asarray(x) for x in X.scales], bank.K, bank.beta, iterations
        )
        worst = max(worst, float(np.abs(state.Y.reference - want_Y[-1]).max()))
        for a, wa in zip(state.A.maps, want_A):
            worst = max(worst, float(np.abs(np.asarray(a) - wa).max()))
    elapsed = time.monotonic() - t0
    assert worst < 1e-12
    assert elapsed < 10.0
    report(1, "inference oracle equivalence", f"max abs err {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_energy_oracle_equivalence():
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(50):
        X, bank = random_family(rng)
        scales = X.num_scales
        shape = X.map_shape
        Y = LatentFeatures([rng.standard_normal(shape) for _ in range(scales)])
        A = AttentionMaps([rng.uniform(0, 1, (1,) + shape[1:]) for _ in range(scales - 1)])
        u = unary_energy(Y, X)
        p = pairwise_energy(Y, A, bank)
        m = attention_smoothing_energy(A, bank)
        worst = max(worst, abs(u - unary_energy_loops(Y.scales, X.scales)))
        worst = max(worst, abs(p - pairwise_energy_loops(Y.scales, A.maps, bank.K)))
        worst = max(worst, abs(m - smoothing_energy_loops(A.maps, bank.beta)))
        e = total_energy(Y, A, X, bank)
        assert e.total == e.unary + e.pairwise + e.attention_smoothing
    assert worst < 1e-10
    report(2, "energy oracle equivalence", f"max abs err {worst:.2e}, total exact")


def test_criterion_3_gradient_correctness():
    t0 = time.monotonic()
    crf = check_crf_gradients(
        seed=11, scales=2, channels=2, height=4, width=4, iterations=2, h=1e-5
    )
    full = check_model_gradients(
        seed=11, scales=2, channels=2, scene_hw=(8, 8), iterations=2, h=1e-5
    )
    elapsed = time.monotonic() - t0
    worst = max(c.max_rel_error for c in crf + full)
    for c in crf + full:
        assert c.max_rel_error < 1e-4, f"{c.name}: {c.max_rel_error:.2e}"
    assert elapsed < 60.0
    report(
        3,
        "gradient correctness vs central differences",
        f"{len(crf) + len(full)} leaves, worst rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_4_fixed_point_and_gating():
    rng = np.random.default_rng(404)
    t0 = time.monotonic()
    checked = 0
    for scales in (2, 3, 4):
        for channels in (1, 2, 3):
            for h, w in ((1, 1), (2, 3), (5, 5)):
                X = MultiScaleFeatures(
                    [rng.standard_normal((channels, h, w)) for _ in range(scales)]
                )
                zeros = KernelBank.zeros(scales, channels)
                for iterations in (1, 2, 5):
                    state = run_inference(X, zeros, InferenceConfig(iterations=iterations))
                    assert all(
                        np.array_equal(y, x) for y, x in zip(state.Y.scales, X.scales)
                    )
                    assert all(np.all(np.asarray(a) == 0.5) for a in state.A.maps)
                bank = KernelBank.random(rng, scales, channels, k_scale=0.5, beta_scale=0.5)
                closed = run_inference(
                    X, bank, InferenceConfig(iterations=2), fixed_attention=0.0
                )
                assert np.array_equal(closed.Y.reference, X.scales[-1])
                open_state = run_inference(X, bank, InferenceConfig(iterations=3))
                for a in open_state.A.maps:
                    a = np.asarray(a)
                    assert np.all(a > 0.0) and np.all(a < 1.0)
                checked += 1
    elapsed = time.monotonic() - t0
    assert elapsed < 5.0
    report(4, "fixed-point and gating invariants", f"{checked} shape cases, {elapsed:.1f}s")


def test_criterion_5_metrics_correctness():
    gt = np.full((1, 3, 3), 2.5)
    m = compute_metrics(gt, gt)
    assert m.rel == 0.0 and m.rms == 0.0 and m.log10 == 0.0
    assert m.delta1 == m.delta2 == m.delta3 == 1.0

    m = compute_metrics(np.full((1, 2, 2), 1.3), np.ones((1, 2, 2)))
    assert abs(m.rel - 0.3) < 1e-12
    assert m.delta1 == 0.0 and m.delta2 == 1.0

    m = compute_metrics(np.ones((1, 2, 2)), np.full((1, 2, 2), 2.0))
    assert abs(m.rel - 0.5) < 1e-12
    assert abs(m.rms - 1.0) < 1e-12
    assert abs(m.log10 - np.log10(2.0)) < 1e-12
    assert m.delta1 == 0.0

    rng = np.random.default_rng(505)
    for _ in range(1000):
        h, w = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        pred = rng.uniform(0.05, 20.0, (1, h, w))
        gt = rng.uniform(0.05, 20.0, (1, h, w))
        r = compute_metrics(pred, gt)
        assert r.delta1 <= r.delta2 <= r.delta3
    report(5, "metrics correctness", "crafted cases exact, delta nesting on 1000 pairs")


def test_criterion_6_toy_training_overfit():
    # pinned: scene seed 0, weight seed 0, lr 7e-5 (see TrainConfig default)
    scenes = generate_dataset(0, 1, SceneSpec())
    cfg = TrainConfig(epochs=200, lr=7e-5, momentum=0.9, batch_size=1)

    curves = []
    for _ in range(2):
        model = ToyModel.initialize(ToyConfig(), np.random.default_rng(0))
        curves.append(train(model, scenes, cfg))
    assert curves[0] == curves[1], "training is not bit-deterministic"

    curve = curves[0]
    ratio = curve[-1] / curve[0]
    assert ratio < 0.1, f"final/initial loss ratio {ratio:.4f}"
    report(
        6,
        "toy training overfit + determinism",
        f"loss {curve[0]:.1f} -> {curve[-1]:.2f} (ratio {ratio:.4f}) in {len(curve)} epochs",
    )


def test_criterion_7_ablation_ordering():
    t0 = time.monotonic()
    results = run_ablation(AblationSpec())
    elapsed = time.monotonic() - t0
    medians = {r.variant: r.median_rms for r in results}
    violations, ties = ordering_violations(results, rel_tol=0.02)
    assert not violations, f"ordering violations: {violations} (medians {medians})"
    assert len(ties) <= 1, f"more than one adjacent-pair tie: {ties}"
    assert elapsed < 900.0
    report(
        7,
        "ablation ordering (qualitative, median rms over 5 seeds)",
        " <= ".join(
            f"{v}={medians[v]:.3f}"
            for v in ("structured", "unstructured", "open_gate", "concat")
        )
        + f", ties {ties}, {elapsed:.0f}s",
    )


def test_criterion_8_throughput_scaling():
    # 8 channels keep per-call dispatch overhead well below compute even at
    # the 32x32 end, so the pixel-count scaling law is what gets measured
    rows = [
        r
        for r in bench_meanfield(
            [32, 64, 128, 256], scales=3, channels=8, iterations=3, repeats=9
        )
        if r.kind == "meanfield"
    ]
    times = {r.height: r.sec_per_iter for r in rows}
    ratios = [times[n * 2] / times[n] for n in (32, 64, 128)]
    for ratio in ratios:
        assert 2.8 <= ratio <= 5.2, f"per-doubling ratios {ratios}"
    report(
        8,
        "throughput scales linearly in pixels",
        "ratios " + ", ".join(f"{r:.2f}" for r in ratios),
    )
