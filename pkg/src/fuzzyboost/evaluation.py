"""Train/test orchestration, accuracy and timing reports, benchmark harness.

Reports use a compact comparison-table layout: per-class classification
quality (CQ, %), learning time (LT, seconds, overall only) and testing time
(TT, seconds), plus a confusion matrix. Timing separates
descriptor file I/O from compute so speed comparisons reflect the
classifiers, not the disk.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .baseline import (
    DEFAULT_DICTIONARY_SIZES,
    DEFAULT_RIDGE_LAMBDA,
    SOLVER_NOTE,
    BaselineModel,
    classify_baseline,
    train_baseline,
)
from .boosting import TrainConfig, class_rng, train_model
from .descriptors import (
    TEST,
    TRAIN,
    DatasetManifest,
    ImageDescriptors,
    ManifestImage,
    load_split,
    select_learning_images,
)
from .ensemble import MultiClassModel, classify
from .errors import ProtocolError


def check_no_leakage(manifest: DatasetManifest) -> None:
    """Hard error if any image id or descriptor file appears in both splits."""
    train_ids = {i.image_id for i in manifest.subset(split=TRAIN)}
    test_ids = {i.image_id for i in manifest.subset(split=TEST)}
    leaked = train_ids & test_ids
    if leaked:
        raise ProtocolError(f"image ids in both splits: {sorted(leaked)[:5]}")
    train_paths = {i.path for i in manifest.subset(split=TRAIN)}
    leaked_paths = train_paths & {i.path for i in manifest.subset(split=TEST)}
    if leaked_paths:
        raise ProtocolError(f"descriptor files in both splits: {sorted(leaked_paths)[:5]}")


@dataclass(frozen=True)
class ClassResult:
    class_name: str
    train_positives: int
    train_negatives: int | None
    test_count: int
    correct: int
    test_time_s: float

    @property
    def accuracy_pct(self) -> float:
        return 100.0 * self.correct / self.test_count if self.test_count else 0.0


@dataclass(frozen=True)
class EvalReport:
    system: str
    classes: tuple[str, ...]
    per_class: tuple[ClassResult, ...]
    confusion: tuple[tuple[int, ...], ...]  # rows: true class, cols: predicted
    learn_time_s: float
    test_time_s: float
    io_time_s: float
    config_digest: str = ""
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if min(self.learn_time_s, self.test_time_s, self.io_time_s) < 0:
            raise ValueError("report times must be non-negative")
        for row, result in zip(self.confusion, self.per_class):
            if sum(row) != result.test_count:
                raise ValueError(
                    f"confusion row for {result.class_name!r} sums to {sum(row)}, "
                    f"expected {result.test_count}"
                )
        diag = sum(self.confusion[i][i] for i in range(len(self.classes)))
        if diag != self.total_correct:
            raise ValueError("confusion diagonal disagrees with per-class corrects")

    @property
    def total_count(self) -> int:
        return sum(r.test_count for r in self.per_class)

    @property
    def total_correct(self) -> int:
        return sum(r.correct for r in self.per_class)

    @property
    def total_accuracy_pct(self) -> float:
        return 100.0 * self.total_correct / self.total_count if self.total_count else 0.0


Predictor = Callable[[ImageDescriptors], str]


def run_evaluation(
    system: str,
    predict: Predictor,
    manifest: DatasetManifest,
    test_images: Mapping[str, ImageDescriptors],
    learn_time_s: float = 0.0,
    io_time_s: float = 0.0,
    negatives_by_class: Mapping[str, int] | None = None,
    config_digest: str = "",
    notes: Sequence[str] = (),
    threads: int = 1,
) -> EvalReport:
    """Classify every test image once and assemble the report."""
    check_no_leakage(manifest)
    entries = manifest.subset(split=TEST)
    if not entries:
        raise ProtocolError("test split is empty")
    index = {cls: i for i, cls in enumerate(manifest.classes)}
    confusion = [[0] * len(manifest.classes) for _ in manifest.classes]
    time_by_class = {cls: 0.0 for cls in manifest.classes}

    def timed_predict(entry: ManifestImage) -> tuple[ManifestImage, str, float]:
        started = time.perf_counter()
        predicted = predict(test_images[entry.image_id])
        return entry, predicted, time.perf_counter() - started

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(timed_predict, entries))
    else:
        outcomes = [timed_predict(e) for e in entries]
    for entry, predicted, elapsed in outcomes:
        confusion[index[entry.class_label]][index[predicted]] += 1
        time_by_class[entry.class_label] += elapsed

    per_class = []
    for cls in manifest.classes:
        row = confusion[index[cls]]
        per_class.append(
            ClassResult(
                class_name=cls,
                train_positives=len(manifest.subset(split=TRAIN, class_label=cls)),
                train_negatives=(
                    negatives_by_class.get(cls) if negatives_by_class is not None else None
                ),
                test_count=sum(row),
                correct=row[index[cls]],
                test_time_s=time_by_class[cls],
            )
        )
    return EvalReport(
        system=system,
        classes=manifest.classes,
        per_class=tuple(per_class),
        confusion=tuple(tuple(row) for row in confusion),
        learn_time_s=learn_time_s,
        test_time_s=sum(time_by_class.values()),
        io_time_s=io_time_s,
        config_digest=config_digest,
        notes=tuple(notes),
    )


def negative_counts(manifest: DatasetManifest, config: TrainConfig) -> dict[str, int]:
    """Negative learning-image count per class, as training would draw them.

    Re-derives the seeded selection without reading descriptor files, so
    reports can state the counts cheaply.
    """
    out = {}
    for cls in manifest.classes:
        _, negatives = select_learning_images(
            manifest, cls, config.negatives, class_rng(config.seed, cls)
        )
        out[cls] = len(negatives)
    return out


def evaluate_model(
    model: MultiClassModel,
    manifest: DatasetManifest,
    learn_time_s: float = 0.0,
    config: TrainConfig | None = None,
    test_cache: Mapping[str, ImageDescriptors] | None = None,
    threads: int = 1,
) -> EvalReport:
    io_started = time.perf_counter()
    if test_cache is None:
        test_cache = load_split(manifest, TEST)
    io_time_s = time.perf_counter() - io_started
    return run_evaluation(
        system="fuzzyboost",
        predict=lambda img: classify(model, img).predicted,
        manifest=manifest,
        test_images=test_cache,
        learn_time_s=learn_time_s,
        io_time_s=io_time_s,
        negatives_by_class=negative_counts(manifest, config) if config else None,
        config_digest=model.metadata.config_digest,
        threads=threads,
    )


def evaluate_baseline_model(
    baseline: BaselineModel,
    manifest: DatasetManifest,
    learn_time_s: float = 0.0,
    test_cache: Mapping[str, ImageDescriptors] | None = None,
    threads: int = 1,
) -> EvalReport:
    io_started = time.perf_counter()
    if test_cache is None:
        test_cache = load_split(manifest, TEST)
    io_time_s = time.perf_counter() - io_started
    return run_evaluation(
        system=f"bof-baseline(K={baseline.dictionary.size})",
        predict=lambda img: classify_baseline(baseline, img),
        manifest=manifest,
        test_images=test_cache,
        learn_time_s=learn_time_s,
        io_time_s=io_time_s,
        notes=(SOLVER_NOTE,),
        threads=threads,
    )


# --- benchmark --------------------------------------------------------------


@dataclass(frozen=True)
class SpeedRatios:
    dictionary_size: int
    learn_ratio: float  # baseline learn time / fuzzyboost learn time
    test_ratio: float
    total_ratio: float


@dataclass(frozen=True)
class BenchmarkReport:
    fuzzy: EvalReport
    baselines: tuple[tuple[int, EvalReport], ...]
    ratios: tuple[SpeedRatios, ...]


def benchmark(
    manifest: DatasetManifest,
    config: TrainConfig = TrainConfig(),
    dictionary_sizes: Sequence[int] = DEFAULT_DICTIONARY_SIZES,
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA,
    threads: int = 1,
) -> BenchmarkReport:
    """Head-to-head run of both pipelines on the same splits.

    Descriptor files are read once up front; learn/test times are compute
    only. Ratios are baseline time over fuzzyboost time, per dictionary size.
    """
    check_no_leakage(manifest)
    io_started = time.perf_counter()
    train_cache = load_split(manifest, TRAIN)
    test_cache = load_split(manifest, TEST)
    io_time_s = time.perf_counter() - io_started

    started = time.perf_counter()
    model = train_model(manifest, config, cache=train_cache, threads=threads)
    fuzzy_learn_s = time.perf_counter() - started
    fuzzy = run_evaluation(
        system="fuzzyboost",
        predict=lambda img: classify(model, img).predicted,
        manifest=manifest,
        test_images=test_cache,
        learn_time_s=fuzzy_learn_s,
        io_time_s=io_time_s,
        negatives_by_class=negative_counts(manifest, config),
        config_digest=model.metadata.config_digest,
        threads=threads,
    )

    baselines = []
    ratios = []
    for k in dictionary_sizes:
        started = time.perf_counter()
        bl = train_baseline(
            manifest, k, seed=config.seed, ridge_lambda=ridge_lambda, cache=train_cache
        )
        bl_learn_s = time.perf_counter() - started
        report = run_evaluation(
            system=f"bof-baseline(K={k})",
            predict=lambda img: classify_baseline(bl, img),
            manifest=manifest,
            test_images=test_cache,
            learn_time_s=bl_learn_s,
            io_time_s=0.0,
            notes=(SOLVER_NOTE,),
            threads=threads,
        )
        baselines.append((k, report))
        ratios.append(
            SpeedRatios(
                dictionary_size=k,
                learn_ratio=_ratio(report.learn_time_s, fuzzy.learn_time_s),
                test_ratio=_ratio(report.test_time_s, fuzzy.test_time_s),
                total_ratio=_ratio(
                    report.learn_time_s + report.test_time_s,
                    fuzzy.learn_time_s + fuzzy.test_time_s,
                ),
            )
        )
    return BenchmarkReport(fuzzy=fuzzy, baselines=tuple(baselines), ratios=tuple(ratios))


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator > 0 else float("inf")


# --- stratified split -------------------------------------------------------


def stratified_split(
    manifest: DatasetManifest, test_fraction: float = 0.15, seed: int = 0
) -> DatasetManifest:
    """Reassign splits: a seeded per-class draw of ``test_fraction`` test images.

    Classes with at least two images keep both splits non-empty; singleton
    classes stay in train.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test fraction must be in (0, 1), got {test_fraction}")
    import numpy as np

    rng = np.random.default_rng(seed)
    assignment: dict[str, str] = {}
    for cls in manifest.classes:
        members = [i for i in manifest.images if i.class_label == cls]
        if not members:
            continue
        n = len(members)
        n_test = int(round(test_fraction * n))
        if n >= 2:
            n_test = min(max(n_test, 1), n - 1)
        else:
            n_test = 0
        order = rng.permutation(n)
        chosen = {members[int(j)].image_id for j in order[:n_test]}
        for img in members:
            assignment[img.image_id] = TEST if img.image_id in chosen else TRAIN
    images = tuple(
        ManifestImage(i.image_id, i.class_label, i.path, assignment[i.image_id])
        for i in manifest.images
    )
    return manifest.with_images(images)


# --- report rendering ---------------------------------------------------------


def report_to_dict(report: EvalReport) -> dict:
    return {
        "system": report.system,
        "classes": list(report.classes),
        "per_class": [
            {
                "class": r.class_name,
                "train_positives": r.train_positives,
                "train_negatives": r.train_negatives,
                "test_count": r.test_count,
                "correct": r.correct,
                "accuracy_pct": r.accuracy_pct,
                "test_time_s": r.test_time_s,
            }
            for r in report.per_class
        ],
        "confusion": [list(row) for row in report.confusion],
        "total_accuracy_pct": report.total_accuracy_pct,
        "learn_time_s": report.learn_time_s,
        "test_time_s": report.test_time_s,
        "io_time_s": report.io_time_s,
        "config_digest": report.config_digest,
        "notes": list(report.notes),
    }


def benchmark_to_dict(bench: BenchmarkReport) -> dict:
    return {
        "fuzzyboost": report_to_dict(bench.fuzzy),
        "baselines": [
            {"dictionary_size": k, "report": report_to_dict(r)} for k, r in bench.baselines
        ],
        "speed_ratios": [
            {
                "dictionary_size": s.dictionary_size,
                "learn_ratio": s.learn_ratio,
                "test_ratio": s.test_ratio,
                "total_ratio": s.total_ratio,
            }
            for s in bench.ratios
        ],
    }


def save_report_json(report: EvalReport | BenchmarkReport, path: str | Path) -> None:
    doc = benchmark_to_dict(report) if isinstance(report, BenchmarkReport) else report_to_dict(report)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _fmt_row(cells: Sequence[str], widths: Sequence[int]) -> str:
    return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()


def render_method_table(report: EvalReport) -> str:
    """Aligned per-method results table: positives, negatives, CQ,
    LT (total row only), TT."""
    header = ["", "Pos. samples", "Neg. samples", "CQ [%]", "LT [s]", "TT [s]"]
    rows = [header]
    for r in report.per_class:
        rows.append(
            [
                r.class_name,
                str(r.train_positives),
                "~" if r.train_negatives is None else str(r.train_negatives),
                f"{r.accuracy_pct:.2f}%",
                "~",
                f"{r.test_time_s:.3f}",
            ]
        )
    total_neg = sum(r.train_negatives or 0 for r in report.per_class)
    rows.append(
        [
            "Total",
            str(sum(r.train_positives for r in report.per_class)),
            "~" if all(r.train_negatives is None for r in report.per_class) else str(total_neg),
            f"{report.total_accuracy_pct:.2f}%",
            f"{report.learn_time_s:.3f}",
            f"{report.test_time_s:.3f}",
        ]
    )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = [f"== {report.system} =="]
    if report.config_digest:
        lines.append(f"config digest: {report.config_digest}")
    lines.extend(_fmt_row(row, widths) for row in rows)
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)


def render_baseline_table(baselines: Sequence[tuple[int, EvalReport]]) -> str:
    """Dictionary-sweep table: one block per size, CQ/LT/TT rows per class."""
    lines = []
    for k, report in baselines:
        lines.append(f"-- Dictionary size: {k} --")
        header = ["", "CQ [%]", "LT [s]", "TT [s]"]
        rows = [header]
        for r in report.per_class:
            rows.append([r.class_name, f"{r.accuracy_pct:.2f}%", "~", f"{r.test_time_s:.3f}"])
        rows.append(
            [
                "Total",
                f"{report.total_accuracy_pct:.2f}%",
                f"{report.learn_time_s:.3f}",
                f"{report.test_time_s:.3f}",
            ]
        )
        widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
        lines.extend(_fmt_row(row, widths) for row in rows)
        lines.append("")
    return "\n".join(lines).rstrip()


def render_confusion(report: EvalReport) -> str:
    header = ["true \\ predicted"] + list(report.classes)
    rows = [header]
    for cls, row in zip(report.classes, report.confusion):
        rows.append([cls] + [str(v) for v in row])
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    return "\n".join(_fmt_row(row, widths) for row in rows)


def render_benchmark(bench: BenchmarkReport) -> str:
    lines = [
        "==== benchmark: fuzzyboost vs bag-of-features ====",
        "",
        render_method_table(bench.fuzzy),
        "",
        render_baseline_table(bench.baselines),
        "",
        "speed ratios (baseline / fuzzyboost):",
    ]
    for s in bench.ratios:
        lines.append(
            f"  K={s.dictionary_size}: learn x{s.learn_ratio:.2f}, "
            f"test x{s.test_ratio:.2f}, total x{s.total_ratio:.2f}"
        )
    return "\n".join(lines)
