#!/usr/bin/env python3
"""Desk-scale head-to-head: boosted fuzzy rules vs bag-of-features.

Generates a synthetic 3-class descriptor dataset, runs the full dictionary
sweep benchmark and prints the comparison tables plus speed ratios. With
--scale you can grow the training set to watch the speed gap widen.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from fuzzyboost.boosting import TrainConfig
from fuzzyboost.descriptors import NegativePolicy, load_manifest
from fuzzyboost.evaluation import benchmark, render_benchmark, save_report_json
from fuzzyboost.synthetic import separable_spec, write_dataset


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("desk-benchmark"))
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--scale", type=int, default=1,
                        help="multiplier on the 30-image-per-class training set")
    parser.add_argument("--t-max", type=int, default=20)
    parser.add_argument("--ks", default="200,250,300,350,400")
    args = parser.parse_args()

    spec = separable_spec(seed=args.seed, train_per_class=30 * args.scale)
    manifest_path = write_dataset(spec, args.out / "data")
    manifest = load_manifest(manifest_path)
    print(f"dataset: {len(manifest.subset(split='train'))} train / "
          f"{len(manifest.subset(split='test'))} test images at {manifest_path}")

    config = TrainConfig(
        t_max=args.t_max, seed=args.seed, negatives=NegativePolicy(fraction=1.0)
    )
    sizes = tuple(int(k) for k in args.ks.split(","))
    report = benchmark(manifest, config, dictionary_sizes=sizes)
    print(render_benchmark(report))
    out_json = args.out / "benchmark.json"
    save_report_json(report, out_json)
    print(f"\nJSON report: {out_json}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
