import numpy as np
import pytest

from fuzzyboost.boosting import TrainConfig, train_model
from fuzzyboost.descriptors import (
    DatasetManifest,
    ManifestImage,
    NegativePolicy,
    load_manifest,
)
from fuzzyboost.errors import ProtocolError
from fuzzyboost.evaluation import (
    BenchmarkReport,
    ClassResult,
    EvalReport,
    benchmark,
    check_no_leakage,
    evaluate_model,
    negative_counts,
    render_baseline_table,
    render_benchmark,
    render_confusion,
    render_method_table,
    report_to_dict,
    stratified_split,
)


FAST_CONFIG = TrainConfig(t_max=6, seed=1, negatives=NegativePolicy(fraction=1.0))


@pytest.fixture(scope="module")
def tiny_manifest(tiny_dataset):
    return load_manifest(tiny_dataset)


@pytest.fixture(scope="module")
def tiny_model(tiny_manifest):
    return train_model(tiny_manifest, FAST_CONFIG)


class TestEvaluate:
    def test_perfect_model_gives_diagonal_confusion(self, tiny_manifest, tiny_model):
        report = evaluate_model(tiny_model, tiny_manifest, config=FAST_CONFIG)
        assert report.total_accuracy_pct == 100.0
        for i, row in enumerate(report.confusion):
            assert row[i] == sum(row)

    def test_report_row_shape_mirrors_results_table(self, tiny_manifest, tiny_model):
        report = evaluate_model(tiny_model, tiny_manifest, config=FAST_CONFIG)
        for r in report.per_class:
            assert r.train_positives == 8
            assert r.train_negatives == 16  # fraction 1.0 of the two other classes
            assert r.test_count == 3
            assert r.test_time_s >= 0
        text = render_method_table(report)
        for column in ("Pos. samples", "Neg. samples", "CQ [%]", "LT [s]", "TT [s]", "Total"):
            assert column in text

    def test_rerun_same_seed_same_accuracy_cells(self, tiny_manifest, tiny_model):
        a = evaluate_model(tiny_model, tiny_manifest)
        b = evaluate_model(tiny_model, tiny_manifest)
        assert a.confusion == b.confusion
        assert [r.correct for r in a.per_class] == [r.correct for r in b.per_class]

    def test_empty_test_split_rejected(self, tiny_manifest, tiny_model):
        train_only = tiny_manifest.with_images(
            tuple(i for i in tiny_manifest.images if i.split == "train")
        )
        with pytest.raises(ProtocolError, match="test split"):
            evaluate_model(tiny_model, train_only)

    def test_accuracy_recomputable_from_confusion(self, tiny_manifest, tiny_model):
        report = evaluate_model(tiny_model, tiny_manifest)
        diag = sum(report.confusion[i][i] for i in range(len(report.classes)))
        total = sum(sum(row) for row in report.confusion)
        assert report.total_accuracy_pct == pytest.approx(100.0 * diag / total)

    def test_threaded_evaluation_matches(self, tiny_manifest, tiny_model):
        a = evaluate_model(tiny_model, tiny_manifest, threads=1)
        b = evaluate_model(tiny_model, tiny_manifest, threads=4)
        assert a.confusion == b.confusion


class TestReportValidation:
    def test_confusion_rows_must_match_counts(self):
        with pytest.raises(ValueError, match="confusion row"):
            EvalReport(
                system="x",
                classes=("a",),
                per_class=(ClassResult("a", 1, None, 5, 5, 0.0),),
                confusion=((3,),),
                learn_time_s=0.0,
                test_time_s=0.0,
                io_time_s=0.0,
            )

    def test_times_non_negative(self):
        with pytest.raises(ValueError, match="non-negative"):
            EvalReport(
                system="x",
                classes=("a",),
                per_class=(ClassResult("a", 1, None, 1, 1, 0.0),),
                confusion=((1,),),
                learn_time_s=-1.0,
                test_time_s=0.0,
                io_time_s=0.0,
            )


class TestLeakageGuard:
    def test_shared_descriptor_file_across_splits(self):
        manifest = DatasetManifest(
            ("a",),
            2,
            (
                ManifestImage("x1", "a", "same.fbds", "train"),
                ManifestImage("x2", "a", "same.fbds", "test"),
            ),
        )
        with pytest.raises(ProtocolError, match="both splits"):
            check_no_leakage(manifest)


class TestStratifiedSplit:
    def test_fraction_and_determinism(self, tiny_manifest):
        a = stratified_split(tiny_manifest, test_fraction=0.25, seed=3)
        b = stratified_split(tiny_manifest, test_fraction=0.25, seed=3)
        assert [i.split for i in a.images] == [i.split for i in b.images]
        for cls in a.classes:
            total = len(a.subset(class_label=cls))
            n_test = len(a.subset(split="test", class_label=cls))
            assert n_test == round(0.25 * total)

    def test_both_splits_non_empty_per_class(self, tiny_manifest):
        split = stratified_split(tiny_manifest, test_fraction=0.15, seed=0)
        for cls in split.classes:
            assert split.subset(split="train", class_label=cls)
            assert split.subset(split="test", class_label=cls)

    def test_seed_changes_selection(self, tiny_manifest):
        picks = {
            tuple(i.image_id for i in stratified_split(tiny_manifest, 0.25, seed=s).subset(split="test"))
            for s in range(5)
        }
        assert len(picks) > 1

    def test_invalid_fraction(self, tiny_manifest):
        with pytest.raises(ValueError):
            stratified_split(tiny_manifest, test_fraction=0.0)
        with pytest.raises(ValueError):
            stratified_split(tiny_manifest, test_fraction=1.0)


class TestNegativeCounts:
    def test_matches_training_draws(self, tiny_manifest):
        config = TrainConfig(seed=4, negatives=NegativePolicy(count=5))
        counts = negative_counts(tiny_manifest, config)
        assert counts == {cls: 5 for cls in tiny_manifest.classes}


@pytest.fixture(scope="module")
def bench(tiny_manifest):
    return benchmark(tiny_manifest, FAST_CONFIG, dictionary_sizes=(20, 30))


class TestBenchmark:
    def test_structure(self, bench):
        assert isinstance(bench, BenchmarkReport)
        assert [k for k, _ in bench.baselines] == [20, 30]
        assert len(bench.ratios) == 2

    def test_ratios_recomputable_from_reports(self, bench):
        for (k, report), ratios in zip(bench.baselines, bench.ratios):
            assert ratios.dictionary_size == k
            assert ratios.learn_ratio == pytest.approx(
                report.learn_time_s / bench.fuzzy.learn_time_s
            )
            assert ratios.test_ratio == pytest.approx(
                report.test_time_s / bench.fuzzy.test_time_s
            )
            assert ratios.total_ratio == pytest.approx(
                (report.learn_time_s + report.test_time_s)
                / (bench.fuzzy.learn_time_s + bench.fuzzy.test_time_s)
            )

    def test_render_contains_sweep_blocks_and_ratios(self, bench):
        text = render_benchmark(bench)
        assert "Dictionary size: 20" in text
        assert "Dictionary size: 30" in text
        assert "speed ratios" in text
        assert "K=20" in text and "K=30" in text

    def test_baseline_reports_carry_solver_note(self, bench):
        for _, report in bench.baselines:
            assert any("kernel ridge" in note for note in report.notes)

    def test_json_rendering(self, bench):
        from fuzzyboost.evaluation import benchmark_to_dict

        doc = benchmark_to_dict(bench)
        assert doc["fuzzyboost"]["total_accuracy_pct"] >= 0
        assert len(doc["baselines"]) == 2
        assert len(doc["speed_ratios"]) == 2

    def test_report_dict_roundtrips_to_json(self, bench):
        import json

        json.dumps(report_to_dict(bench.fuzzy))
        json.dumps(render_confusion(bench.fuzzy))
        assert "true \\ predicted" in render_confusion(bench.fuzzy)

    def test_baseline_table_layout(self, bench):
        text = render_baseline_table(bench.baselines)
        assert text.count("Total") == 2
        assert "CQ [%]" in text
