"""Command-line surface binding inference, energy, gradients, training,
metrics, data generation and benchmarking to `.ten` file I/O.

Exit codes: 0 success, 1 compute failure (divergence, non-finite values,
failed gradient check), 2 input or validation error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fileio
from .ablation import AblationSpec, ablation_csv, format_table, run_ablation
from .bench import bench_csv, bench_meanfield
from .energy import (
    AttentionMaps,
    KernelBank,
    LatentFeatures,
    MultiScaleFeatures,
    total_energy,
)
from .gradcheck import check_crf_gradients, check_model_gradients
from .meanfield import InferenceConfig, run_inference
from .metrics import compute_metrics
from .model import FUSION_MODES, ToyConfig, ToyModel
from .synthetic import SceneSpec, generate_dataset, load_dataset, save_dataset
from .train import DivergenceError, TrainConfig, train


def _parse_size(text: str) -> tuple[int, int]:
    if "x" in text:
        h, w = text.lower().split("x", 1)
        return int(h), int(w)
    n = int(text)
    return n, n


def _read_indexed(directory: Path, prefix: str) -> list[np.ndarray]:
    paths = sorted(
        directory.glob(f"{prefix}_*.ten"),
        key=lambda p: int(p.stem.split("_")[-1]),
    )
    if not paths:
        raise FileNotFoundError(f"no {prefix}_*.ten files in {directory}")
    return [fileio.read_tensor(p) for p in paths]


def _load_kernel_bank(directory: Path) -> KernelBank:
    return KernelBank(
        K=_read_indexed(directory, "K"), beta=_read_indexed(directory, "beta")
    )


def cmd_gen_data(args) -> int:
    h, w = _parse_size(args.size)
    spec = SceneSpec(height=h, width=w)
    scenes = generate_dataset(args.seed, args.count, spec)
    save_dataset(args.out, scenes, meta={"seed": args.seed})
    print(f"wrote {len(scenes)} scenes ({h}x{w}) to {args.out}")
    return 0


def cmd_infer(args) -> int:
    features_dir = Path(args.features)
    X = MultiScaleFeatures(_read_indexed(features_dir, "x"))
    bank = _load_kernel_bank(Path(args.kernels))
    cfg = InferenceConfig.from_file(args.config) if args.config else InferenceConfig()
    state = run_inference(X, bank, cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_tensor(out / "y_S.ten", state.Y.reference)
    for i, a in enumerate(state.A.maps, start=1):
        fileio.write_tensor(out / f"a_{i}.ten", a)
    manifest = dict(cfg.to_kv())
    manifest["scales"] = X.num_scales
    manifest["channels"] = X.map_shape[0]
    if args.decoder:
        model = ToyModel.load(args.decoder)
        depth = model.decode(model.params, state.Y.reference)
        fileio.write_tensor(out / "depth.ten", depth)
        fileio.write_pgm16(out / "depth.pgm", depth)
        manifest["decoder"] = args.decoder
    fileio.write_kv(out / "manifest.txt", manifest)
    print(f"inference done: {cfg.iterations} iterations, outputs in {out}")
    return 0


def cmd_energy(args) -> int:
    X = MultiScaleFeatures(_read_indexed(Path(args.features), "x"))
    bank = _load_kernel_bank(Path(args.kernels))
    if args.latent:
        Y = LatentFeatures(_read_indexed(Path(args.latent), "y"))
    else:
        Y = LatentFeatures(list(X.scales))
    if args.attention:
        A = AttentionMaps(_read_indexed(Path(args.attention), "a"))
    else:
        _, h, w = X.map_shape
        A = AttentionMaps([np.full((1, h, w), 0.5) for _ in range(X.num_scales - 1)])
    e = total_energy(Y, A, X, bank)
    print(f"unary               {e.unary:.12g}")
    print(f"pairwise            {e.pairwise:.12g}")
    print(f"attention_smoothing {e.attention_smoothing:.12g}")
    print(f"total               {e.total:.12g}")
    return 0


def cmd_grad_check(args) -> int:
    checks = check_crf_gradients(
        seed=args.seed, height=args.size, width=args.size, iterations=args.iterations
    )
    if not args.crf_only:
        checks += check_model_gradients(seed=args.seed)
    worst = 0.0
    print(f"{'leaf':<12} {'max rel error':>14}")
    for c in checks:
        print(f"{c.name:<12} {c.max_rel_error:>14.3e}")
        worst = max(worst, c.max_rel_error)
    ok = worst < args.threshold
    print(f"{'PASS' if ok else 'FAIL'}: worst {worst:.3e} vs threshold {args.threshold:g}")
    return 0 if ok else 1


def cmd_train(args) -> int:
    scenes = load_dataset(args.data)
    toy = ToyConfig(
        scales=args.scales,
        channels=args.channels,
        iterations=args.iterations,
        fusion=args.fusion,
    )
    model = ToyModel.initialize(toy, np.random.default_rng(args.seed))
    cfg = TrainConfig(
        epochs=args.epochs,
        lr=args.lr,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        batch_size=args.batch_size,
        shuffle_seed=args.seed,
    )
    curve = train(model, scenes, cfg)
    out = Path(args.out)
    model.save(out)
    lines = ["epoch,mean_loss"] + [f"{i},{v:.10g}" for i, v in enumerate(curve)]
    (out / "loss.csv").write_text("\n".join(lines) + "\n")
    print(f"trained {cfg.epochs} epochs: loss {curve[0]:.6g} -> {curve[-1]:.6g}")
    print(f"checkpoint in {out}")
    return 0


def cmd_ablate(args) -> int:
    seeds = tuple(int(s) for s in args.seeds.split(","))
    spec = AblationSpec(seeds=seeds)
    if args.epochs is not None:
        spec = replace(spec, train=replace(spec.train, epochs=args.epochs))
    results = run_ablation(spec)
    print(format_table(results))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ablation.csv").write_text(ablation_csv(results, seeds))
        print(f"per-seed metrics in {out / 'ablation.csv'}")
    return 0


def cmd_metrics(args) -> int:
    pred = fileio.read_tensor(args.pred)
    gt = fileio.read_tensor(args.gt)
    report = compute_metrics(pred, gt)
    for name, value in report.as_dict().items():
        print(f"{name:<8} {value:.4f}")
    if args.out:
        header = ",".join(report.as_dict())
        values = ",".join(f"{v:.10g}" for v in report.as_dict().values())
        Path(args.out).write_text(f"{header}\n{values}\n")
    return 0


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else []
    rows = bench_meanfield(
        sizes,
        scales=args.scales,
        channels=args.channels,
        iterations=args.iterations,
        repeats=args.repeats,
        threads=args.threads,
        seed=args.seed,
    )
    text = bench_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gatedcrf",
        description="Attention-gated multi-scale CRF fusion: inference, energy, "
        "gradients, toy depth training and benchmarking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic scene dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--size", default="16x16", help="HxW, e.g. 16x16")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("infer", help="run mean-field inference on .ten features")
    p.add_argument("--features", required=True, help="dir with x_1.ten .. x_S.ten")
    p.add_argument("--kernels", required=True, help="dir with K_i.ten and beta_i.ten")
    p.add_argument("--config", help="key = value file (iterations, ...)")
    p.add_argument("--decoder", help="model checkpoint dir; also writes a depth map")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("energy", help="evaluate the CRF energy breakdown")
    p.add_argument("--features", required=True)
    p.add_argument("--kernels", required=True)
    p.add_argument("--latent", help="dir with y_1.ten .. y_S.ten (default: observations)")
    p.add_argument("--attention", help="dir with a_1.ten .. (default: 0.5 everywhere)")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("grad-check", help="analytic gradients vs central differences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--size", type=int, default=4)
    p.add_argument("--iterations", type=int, default=2)
    p.add_argument("--crf-only", action="store_true")
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("train", help="train the toy depth model on a dataset dir")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p.add_argument("--lr", type=float, default=TrainConfig.lr)
    p.add_argument("--momentum", type=float, default=TrainConfig.momentum)
    p.add_argument("--weight-decay", type=float, default=TrainConfig.weight_decay)
    p.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    p.add_argument("--scales", type=int, default=3)
    p.add_argument("--channels", type=int, default=8)
    p.add_argument("--iterations", type=int, default=3)
    p.add_argument("--fusion", choices=FUSION_MODES, default="structured")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ablate", help="run the four-variant fusion ablation")
    p.add_argument("--seeds", default="0,1,2,3,4", help="comma-separated seeds")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("metrics", help="depth metrics between two .ten maps")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", help="also write metrics as CSV")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("bench", help="per-iteration mean-field timing CSV")
    p.add_argument("--sizes", default="32,64,128", help="comma-separated grid sizes")
    p.add_argument("--scales", type=int, default=3)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--iterations", type=int, default=3)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse validation failure -> input error
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (DivergenceError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
