"""Command-line interface.

Subcommands: split, train, classify, evaluate, benchmark, addclass, export.
Option precedence is flags > config file (--config, JSON) > defaults; the
effective training configuration is echoed into report headers and model
metadata as a digest. Structured logs go to stderr, results to stdout or the
requested output files. Exit codes: 0 success, 1 runtime/domain failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .baseline import DEFAULT_DICTIONARY_SIZES, DEFAULT_RIDGE_LAMBDA, load_baseline, save_baseline, train_baseline
from .boosting import Metric, TrainConfig, train_class, train_model
from .descriptors import NegativePolicy, load_manifest, load_split, read_descriptor_file, save_manifest
from .ensemble import add_class, classify, load_model, save_model, save_model_text
from .errors import FuzzyBoostError
from .evaluation import (
    benchmark,
    evaluate_baseline_model,
    evaluate_model,
    render_baseline_table,
    render_benchmark,
    render_confusion,
    render_method_table,
    save_report_json,
    stratified_split,
)
from .rules import TNorm
from .synthetic import SyntheticSpec, write_dataset


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    parser.add_argument(
        "--threads", type=int, default=None, help="parallelism cap (default: cpu count)"
    )
    parser.add_argument(
        "--log-level",
        choices=["debug", "info", "warning", "error"],
        default=None,
        help="stderr log verbosity (default warning)",
    )
    parser.add_argument("--config", type=Path, default=None, help="JSON file of option defaults")


def _add_train_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--t-max", type=int, default=None, help="boosting round cap (default 50)")
    parser.add_argument(
        "--tnorm", choices=[t.value for t in TNorm], default=None, help="rule t-norm (default minimum)"
    )
    parser.add_argument(
        "--metric",
        choices=[m.value for m in Metric],
        default=None,
        help="descriptor matching metric (default euclidean)",
    )
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--neg-count", type=int, default=None, help="negative images per class (default 17)")
    group.add_argument(
        "--neg-frac", type=float, default=None, help="fraction of the negative pool to draw"
    )
    parser.add_argument("--sigma-floor-abs", type=float, default=None)
    parser.add_argument("--sigma-floor-rel", type=float, default=None)


class _Options:
    """Flags > config file > defaults."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file_config = {}
        if getattr(args, "config", None):
            self.file_config = json.loads(Path(args.config).read_text())

    def get(self, name: str, default):
        flag = getattr(self.args, name, None)
        if flag is not None:
            return flag
        if name in self.file_config:
            return self.file_config[name]
        return default


def _train_config(opts: _Options) -> TrainConfig:
    from .rules import SigmaFloor

    neg_count = opts.get("neg_count", None)
    neg_frac = opts.get("neg_frac", None)
    if neg_count is not None and neg_frac is not None:
        raise FuzzyBoostError("neg_count and neg_frac are mutually exclusive")
    if neg_frac is not None:
        negatives = NegativePolicy(fraction=neg_frac)
    else:
        negatives = NegativePolicy(count=neg_count if neg_count is not None else 17)
    return TrainConfig(
        t_max=opts.get("t_max", 50),
        tnorm=TNorm(opts.get("tnorm", TNorm.MINIMUM.value)),
        seed=opts.get("seed", 0),
        sigma_floor=SigmaFloor(
            absolute=opts.get("sigma_floor_abs", 1e-3),
            relative=opts.get("sigma_floor_rel", 1e-6),
        ),
        metric=Metric(opts.get("metric", Metric.EUCLIDEAN.value)),
        negatives=negatives,
    )


def _setup_logging(opts: _Options) -> None:
    level = opts.get("log_level", "warning").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level), format="%(message)s")


def _threads(opts: _Options) -> int:
    return max(1, int(opts.get("threads", os.cpu_count() or 1)))


def cmd_train(args: argparse.Namespace) -> int:
    opts = _Options(args)
    _setup_logging(opts)
    manifest = load_manifest(args.manifest)
    config = _train_config(opts)
    if args.classes == "all":
        wanted = manifest.classes
    else:
        wanted = tuple(c.strip() for c in args.classes.split(",") if c.strip())
        for cls in wanted:
            if cls not in manifest.classes:
                _usage_error(f"unknown class {cls!r}; manifest has {', '.join(manifest.classes)}")
    cache = load_split(manifest, "train")
    ensembles = []
    for cls in wanted:
        records = []
        started = time.perf_counter()
        ens = train_class(manifest, cls, config, cache=cache, observer=records.append)
        elapsed = time.perf_counter() - started
        for r in records:
            alpha = "-" if r.alpha is None else f"{r.alpha:.4f}"
            flag = "accepted" if r.accepted else "discarded"
            print(f"{cls} round {r.round}: epsilon={r.epsilon:.4f} alpha={alpha} {flag}")
        print(f"{cls}: {len(ens.rules)} rules in {elapsed:.2f}s")
        ensembles.append(ens)
    from .ensemble import ModelMetadata, MultiClassModel

    model = MultiClassModel(
        ensembles=tuple(ensembles),
        metadata=ModelMetadata(seed=config.seed, config_digest=config.digest()),
    )
    save_model(model, args.out)
    print(f"model written to {args.out} ({len(model.ensembles)} classes)")
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    opts = _Options(args)
    _setup_logging(opts)
    model = load_model(args.model)
    failures = 0
    for path in args.files:
        try:
            image = read_descriptor_file(path, expected_n=model.dimensionality)
            result = classify(model, image)
            scores = " ".join(f"{c}={s:.6f}" for c, s in result.scores.items())
            tie = " tie" if result.tie else ""
            print(f"{image.image_id}\t{result.predicted}\t{scores}{tie}")
        except (FuzzyBoostError, OSError) as exc:
            failures += 1
            print(f"error: {path}: {exc}", file=sys.stderr)
    return 1 if failures else 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    opts = _Options(args)
    _setup_logging(opts)
    manifest = load_manifest(args.manifest)
    threads = _threads(opts)
    if args.model:
        report = evaluate_model(load_model(args.model), manifest, threads=threads)
    else:
        report = evaluate_baseline_model(load_baseline(args.baseline), manifest, threads=threads)
    print(render_method_table(report))
    print()
    print(render_confusion(report))
    if args.report:
        save_report_json(report, args.report)
        print(f"report written to {args.report}")
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    opts = _Options(args)
    _setup_logging(opts)
    manifest = load_manifest(args.manifest)
    config = _train_config(opts)
    sizes = tuple(int(k) for k in str(opts.get("ks", args.ks)).split(",") if k)
    bench = benchmark(
        manifest,
        config,
        dictionary_sizes=sizes,
        ridge_lambda=opts.get("ridge_lambda", DEFAULT_RIDGE_LAMBDA),
        threads=_threads(opts),
    )
    print(f"config: {json.dumps(config.to_dict(), sort_keys=True)}")
    print(render_benchmark(bench))
    if args.report:
        save_report_json(bench, args.report)
        print(f"report written to {args.report}")
    return 0


def cmd_addclass(args: argparse.Namespace) -> int:
    opts = _Options(args)
    _setup_logging(opts)
    model = load_model(args.model)
    manifest = load_manifest(args.manifest)
    config = _train_config(opts)
    ens = train_class(manifest, args.class_name, config)
    updated = add_class(model, ens)
    save_model(updated, args.out)
    print(f"added class {args.class_name!r}; model now has {len(updated.ensembles)} classes")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    opts = _Options(args)
    _setup_logging(opts)
    manifest = load_manifest(args.manifest)
    updated = stratified_split(
        manifest, test_fraction=args.test_frac, seed=opts.get("seed", 0)
    )
    save_manifest(updated, args.out)
    counts = {
        "train": len(updated.subset(split="train")),
        "test": len(updated.subset(split="test")),
    }
    print(f"split written to {args.out}: {counts['train']} train / {counts['test']} test")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    opts = _Options(args)
    _setup_logging(opts)
    save_model_text(load_model(args.model), args.out)
    print(f"text export written to {args.out}")
    return 0


def cmd_train_baseline(args: argparse.Namespace) -> int:
    opts = _Options(args)
    _setup_logging(opts)
    manifest = load_manifest(args.manifest)
    bl = train_baseline(
        manifest,
        k=args.k,
        seed=opts.get("seed", 0),
        ridge_lambda=opts.get("ridge_lambda", DEFAULT_RIDGE_LAMBDA),
    )
    save_baseline(bl, args.out)
    print(f"baseline model (K={args.k}) written to {args.out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    opts = _Options(args)
    _setup_logging(opts)
    spec = SyntheticSpec(
        classes=tuple(args.classes.split(",")),
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        descriptors_per_image=args.descriptors_per_image,
        dimensionality=args.dimensionality,
        spread=args.spread,
        separation=args.separation,
        seed=opts.get("seed", 0),
    )
    manifest_path = write_dataset(spec, args.out)
    print(f"synthetic dataset written; manifest at {manifest_path}")
    return 0


_parser_error: list[str] = []


def _usage_error(message: str) -> None:
    print(f"usage error: {message}", file=sys.stderr)
    raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzyboost",
        description="Boosted fuzzy-rule image classifier over local-feature descriptors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a multi-class model from a manifest")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--classes", default="all", help='comma-separated class names or "all"')
    _add_train_options(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="classify descriptor files with a trained model")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("files", nargs="+", type=Path)
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="accuracy/timing report on the manifest test split")
    p.add_argument("--manifest", required=True, type=Path)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", type=Path, help="fuzzyboost model file")
    group.add_argument("--baseline", type=Path, help="bag-of-features baseline model file")
    p.add_argument("--report", type=Path, help="also write the JSON report here")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="fuzzyboost vs bag-of-features on one dataset")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument(
        "--ks",
        default=",".join(str(k) for k in DEFAULT_DICTIONARY_SIZES),
        help="comma-separated dictionary sizes",
    )
    p.add_argument("--ridge-lambda", dest="ridge_lambda", type=float, default=None)
    p.add_argument("--report", type=Path, help="also write the JSON report here")
    _add_train_options(p)
    _add_common(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("addclass", help="train one new class and add it to a model")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--class", dest="class_name", required=True)
    p.add_argument("--out", required=True, type=Path)
    _add_train_options(p)
    _add_common(p)
    p.set_defaults(func=cmd_addclass)

    p = sub.add_parser("split", help="stratified train/test split of a manifest")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--test-frac", type=float, default=0.15)
    _add_common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("export", help="write a JSON text export of a model file")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    _add_common(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("train-baseline", help="train and save the bag-of-features baseline")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--k", type=int, required=True, help="dictionary size")
    p.add_argument("--ridge-lambda", dest="ridge_lambda", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("synth", help="generate a synthetic descriptor dataset")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--classes", default="bus,cat,train")
    p.add_argument("--train-per-class", type=int, default=30)
    p.add_argument("--test-per-class", type=int, default=10)
    p.add_argument("--descriptors-per-image", type=int, default=20)
    p.add_argument("--dimensionality", type=int, default=16)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--separation", type=float, default=6.0)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FuzzyBoostError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
