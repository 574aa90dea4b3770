"""Sweep ablation knobs (lr, epochs, clutter) and print per-variant test rms.

Usage: python scripts/calibrate_ablation.py --seeds 0,1 --lrs 5e-5,1e-4 \
           --epochs 200 --clutters 1.5,3.0
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from gatedcrf.ablation import AblationSpec, VARIANT_ORDER, run_variant
from gatedcrf.synthetic import SceneSpec
from gatedcrf.train import TrainConfig


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", default="0,1")
    parser.add_argument("--lrs", default="5e-5,1e-4")
    parser.add_argument("--epochs", default="200")
    parser.add_argument("--clutters", default="3.0")
    args = parser.parse_args()

    seeds = tuple(int(s) for s in args.seeds.split(","))
    for clutter in (float(c) for c in args.clutters.split(",")):
        for epochs in (int(e) for e in args.epochs.split(",")):
            for lr in (float(x) for x in args.lrs.split(",")):
                spec = AblationSpec(
                    scene=replace(SceneSpec(), clutter_noise=clutter),
                    train=TrainConfig(epochs=epochs, lr=lr, batch_size=4),
                )
                t0 = time.perf_counter()
                med = {
                    v: float(np.median([run_variant(v, s, spec).rms for s in seeds]))
                    for v in VARIANT_ORDER
                }
                ordered = (
                    med["structured"]
                    <= med["unstructured"]
                    <= med["open_gate"]
                    <= med["concat"]
                )
                print(
                    f"clutter={clutter} epochs={epochs} lr={lr:g}: "
                    + " ".join(f"{v}={med[v]:.4f}" for v in VARIANT_ORDER)
                    + f"  ordered={ordered}  ({time.perf_counter() - t0:.0f}s)",
                    flush=True,
                )


if __name__ == "__main__":
    main()
