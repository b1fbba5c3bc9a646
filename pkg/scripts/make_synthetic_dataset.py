#!/usr/bin/env python3
"""Generate a synthetic descriptor dataset with full control over geometry.

Same engine as ``fuzzyboost synth`` but exposed as a script for experiment
sweeps (e.g. varying cluster separation to study where boosting starts to
need more rounds).
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from fuzzyboost.synthetic import SyntheticSpec, write_dataset


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--classes", default="bus,cat,train")
    parser.add_argument("--train-per-class", type=int, default=30)
    parser.add_argument("--test-per-class", type=int, default=10)
    parser.add_argument("--descriptors-per-image", type=int, default=20)
    parser.add_argument("--dimensionality", type=int, default=16)
    parser.add_argument("--spread", type=float, default=1.0)
    parser.add_argument("--separation", type=float, default=6.0,
                        help="cluster-center offset in units of spread")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    spec = SyntheticSpec(
        classes=tuple(args.classes.split(",")),
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        descriptors_per_image=args.descriptors_per_image,
        dimensionality=args.dimensionality,
        spread=args.spread,
        separation=args.separation,
        seed=args.seed,
    )
    manifest_path = write_dataset(spec, args.out)
    print(manifest_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
