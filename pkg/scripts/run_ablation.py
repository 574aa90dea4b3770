"""Run the four-variant fusion ablation and write per-seed metrics to CSV.

Usage: python scripts/run_ablation.py [out_dir] [--seeds 0,1,2,3,4] [--epochs N]
"""

import argparse
from dataclasses import replace
from pathlib import Path

from gatedcrf.ablation import AblationSpec, ablation_csv, format_table, run_ablation


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", nargs="?", default="ablation_out")
    parser.add_argument("--seeds", default="0,1,2,3,4")
    parser.add_argument("--epochs", type=int, default=None)
    args = parser.parse_args()

    seeds = tuple(int(s) for s in args.seeds.split(","))
    spec = AblationSpec(seeds=seeds)
    if args.epochs is not None:
        spec = replace(spec, train=replace(spec.train, epochs=args.epochs))

    results = run_ablation(spec)
    print(format_table(results))

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.csv").write_text(ablation_csv(results, seeds))
    print(f"\nper-seed metrics written to {out / 'ablation.csv'}")


if __name__ == "__main__":
    main()
