import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzyboost.ensemble import (
    ClassEnsemble,
    ModelMetadata,
    MultiClassModel,
    add_class,
    classify,
    ensemble_to_bytes,
    load_model,
    model_to_dict,
    save_model,
    score_class,
    score_rule,
)
from fuzzyboost.errors import (
    DimensionMismatchError,
    ModelAssemblyError,
    ModelCorruptError,
    ModelVersionError,
)
from fuzzyboost.rules import DUAL_CONORM, FuzzyRule, TConorm, TNorm


def rule_at(center, width=1.0, importance=1.0, raw_alpha=1.0):
    center = np.asarray(center, dtype=np.float64)
    return FuzzyRule(
        centers=center,
        widths=np.full_like(center, width),
        importance=importance,
        raw_alpha=raw_alpha,
    )


def single_rule_ensemble(name, center, width=1.0, tnorm=TNorm.MINIMUM):
    return ClassEnsemble(name, (rule_at(center, width),), tnorm)


def random_model(rng, n_classes=3, max_rules=3, dim=4):
    ensembles = []
    for c in range(n_classes):
        t = int(rng.integers(1, max_rules + 1))
        alphas = rng.uniform(0.1, 2.0, size=t)
        betas = alphas / alphas.sum()
        betas[-1] = 1.0 - betas[:-1].sum()  # exact sum despite rounding
        rules = tuple(
            rule_at(rng.normal(scale=3, size=dim), float(rng.uniform(0.2, 2.0)),
                    float(b), float(a))
            for a, b in zip(alphas, betas)
        )
        ensembles.append(ClassEnsemble(f"class{c}", rules))
    return MultiClassModel(
        tuple(ensembles), ModelMetadata(seed=int(rng.integers(0, 1000)), config_digest="t")
    )


def brute_force_class_score(ensemble, query, tconorm=None):
    """Independent double-loop evaluation of the rule/descriptor aggregation."""
    tconorm = tconorm or DUAL_CONORM[ensemble.tnorm]
    total = 0.0
    for rule in ensemble.rules:
        per_descriptor = []
        for row in np.atleast_2d(query):
            memberships = [
                math.exp(-(((x - m) / s) ** 2))
                for x, m, s in zip(row, rule.centers, rule.widths)
            ]
            if ensemble.tnorm == TNorm.MINIMUM:
                act = min(memberships)
            else:
                act = math.prod(memberships)
            per_descriptor.append(act)
        if tconorm == TConorm.MAXIMUM:
            f = max(per_descriptor)
        else:
            f = 1.0 - math.prod(1.0 - a for a in per_descriptor)
        total += rule.importance * f
    return total


class TestScoreRule:
    def test_center_vector_saturates(self):
        rule = rule_at([1.0, -2.0])
        query = np.array([[5.0, 5.0], [1.0, -2.0]])
        assert score_rule(rule, query, TNorm.MINIMUM, TConorm.MAXIMUM) == 1.0
        assert score_rule(rule, query, TNorm.PRODUCT, TConorm.PROBABILISTIC_SUM) == 1.0

    def test_max_conorm_picks_best_descriptor(self):
        rule = rule_at([0.0])
        # memberships exp(-x^2): pick x giving 0.3 and 0.7
        query = np.array([[math.sqrt(-math.log(0.3))], [math.sqrt(-math.log(0.7))]])
        assert score_rule(rule, query) == pytest.approx(0.7, abs=1e-12)

    def test_probabilistic_sum(self):
        rule = rule_at([0.0])
        query = np.array([[math.sqrt(-math.log(0.3))], [math.sqrt(-math.log(0.7))]])
        got = score_rule(rule, query, TNorm.MINIMUM, TConorm.PROBABILISTIC_SUM)
        assert got == pytest.approx(1.0 - 0.7 * 0.3, abs=1e-12)

    def test_adding_descriptor_never_decreases_max(self):
        rng = np.random.default_rng(0)
        rule = rule_at(rng.normal(size=3))
        query = rng.normal(size=(4, 3))
        base = score_rule(rule, query)
        for _ in range(10):
            extended = np.vstack([query, rng.normal(size=(1, 3))])
            assert score_rule(rule, extended) >= base


class TestScoreClass:
    def test_single_rule_equals_rule_score(self):
        ens = single_rule_ensemble("a", [0.5, 0.5])
        rng = np.random.default_rng(1)
        query = rng.normal(size=(5, 2))
        assert score_class(ens, query) == pytest.approx(
            score_rule(ens.rules[0], query), abs=1e-15
        )

    def test_half_half_importances(self):
        hit = rule_at([0.0], importance=0.5)
        # 1e9 sigmas away: activation underflows to exactly 0
        miss = rule_at([1e9], width=1.0, importance=0.5)
        ens = ClassEnsemble("a", (hit, miss))
        assert score_class(ens, np.array([[0.0]])) == pytest.approx(0.5, abs=1e-15)

    def test_all_rules_saturated(self):
        rules = tuple(rule_at([0.0, 0.0], importance=1.0 / 3.0) for _ in range(3))
        ens = ClassEnsemble("a", rules)
        assert score_class(ens, np.array([[0.0, 0.0]])) == pytest.approx(1.0, abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_matches_brute_force_double_loop(self, seed):
        rng = np.random.default_rng(seed)
        model = random_model(rng, n_classes=2, max_rules=3, dim=3)
        query = rng.normal(scale=2, size=(int(rng.integers(1, 5)), 3))
        for tconorm in (TConorm.MAXIMUM, TConorm.PROBABILISTIC_SUM):
            for ens in model.ensembles:
                assert score_class(ens, query, tconorm) == pytest.approx(
                    brute_force_class_score(ens, query, tconorm), abs=1e-12
                )

    def test_scores_stay_in_unit_interval(self):
        rng = np.random.default_rng(2)
        for seed in range(20):
            model = random_model(np.random.default_rng(seed))
            query = rng.normal(scale=5, size=(3, 4))
            for ens in model.ensembles:
                s = score_class(ens, query)
                assert -1e-12 <= s <= 1.0 + 1e-9

    def test_query_row_permutation_invariance(self):
        rng = np.random.default_rng(3)
        ens = random_model(rng).ensembles[0]
        query = rng.normal(size=(6, 4))
        assert score_class(ens, query) == score_class(ens, query[::-1])

    def test_duplicate_descriptor_invariance_under_max(self):
        rng = np.random.default_rng(4)
        ens = random_model(rng).ensembles[0]
        query = rng.normal(size=(3, 4))
        doubled = np.vstack([query, query[1]])
        assert score_class(ens, query) == score_class(ens, doubled)


class TestClassify:
    def test_dominant_class_wins(self):
        model = MultiClassModel(
            (
                single_rule_ensemble("bus", [0.0, 0.0]),
                single_rule_ensemble("cat", [100.0, 100.0]),
                single_rule_ensemble("train", [-100.0, 100.0]),
            )
        )
        result = classify(model, np.array([[0.1, -0.1]]))
        assert result.predicted == "bus"
        assert not result.tie
        assert set(result.scores) == {"bus", "cat", "train"}
        assert result.scores["bus"] > result.scores["cat"]

    def test_exact_tie_breaks_lexicographically(self):
        model = MultiClassModel(
            (
                single_rule_ensemble("zebra", [0.0]),
                single_rule_ensemble("aardvark", [0.0]),
            )
        )
        result = classify(model, np.array([[0.3]]))
        assert result.predicted == "aardvark"
        assert result.tie

    def test_dimension_mismatch(self):
        model = MultiClassModel((single_rule_ensemble("a", [0.0, 0.0]),))
        with pytest.raises(DimensionMismatchError):
            classify(model, np.array([[1.0, 2.0, 3.0]]))


class TestAddClass:
    def test_prior_ensembles_byte_identical(self):
        rng = np.random.default_rng(5)
        model = random_model(rng, n_classes=2)
        before = [ensemble_to_bytes(e) for e in model.ensembles]
        grown = add_class(model, single_rule_ensemble("new", [9.0, 9.0, 9.0, 9.0]))
        after = [ensemble_to_bytes(e) for e in grown.ensembles[:2]]
        assert before == after
        assert grown.classes == model.classes + ("new",)

    def test_prior_scores_unchanged_exactly(self):
        rng = np.random.default_rng(6)
        model = random_model(rng, n_classes=2)
        grown = add_class(model, single_rule_ensemble("far", [50.0] * 4))
        for _ in range(100):
            query = rng.normal(size=(2, 4))
            old = classify(model, query)
            new = classify(grown, query)
            for cls in model.classes:
                assert new.scores[cls] == old.scores[cls]

    def test_duplicate_name_rejected(self):
        model = MultiClassModel((single_rule_ensemble("a", [0.0]),))
        with pytest.raises(ModelAssemblyError, match="already contains"):
            add_class(model, single_rule_ensemble("a", [1.0]))

    def test_dimension_mismatch_rejected(self):
        model = MultiClassModel((single_rule_ensemble("a", [0.0]),))
        with pytest.raises(DimensionMismatchError):
            add_class(model, single_rule_ensemble("b", [0.0, 1.0]))


class TestSerialization:
    def test_roundtrip_random_models(self, tmp_path):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            model = random_model(rng)
            path = tmp_path / f"m{seed}.fbm"
            save_model(model, path)
            got = load_model(path)
            assert got.classes == model.classes
            assert got.metadata == model.metadata
            for a, b in zip(got.ensembles, model.ensembles):
                assert a.tnorm == b.tnorm
                for ra, rb in zip(a.rules, b.rules):
                    assert (ra.centers == rb.centers).all()
                    assert (ra.widths == rb.widths).all()
                    assert ra.importance == rb.importance
                    assert ra.raw_alpha == rb.raw_alpha

    def test_save_is_deterministic(self, tmp_path):
        model = random_model(np.random.default_rng(11))
        save_model(model, tmp_path / "a.fbm")
        save_model(model, tmp_path / "b.fbm")
        assert (tmp_path / "a.fbm").read_bytes() == (tmp_path / "b.fbm").read_bytes()

    def test_truncated_file_detected(self, tmp_path):
        model = random_model(np.random.default_rng(7))
        path = tmp_path / "m.fbm"
        save_model(model, path)
        path.write_bytes(path.read_bytes()[:-20])
        with pytest.raises(ModelCorruptError):
            load_model(path)

    def test_bit_flip_detected(self, tmp_path):
        model = random_model(np.random.default_rng(8))
        path = tmp_path / "m.fbm"
        save_model(model, path)
        raw = bytearray(path.read_bytes())
        raw[30] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(ModelCorruptError):
            load_model(path)

    def test_future_version_detected(self, tmp_path):
        model = random_model(np.random.default_rng(9))
        path = tmp_path / "m.fbm"
        save_model(model, path)
        raw = bytearray(path.read_bytes())
        raw[4] = 99
        path.write_bytes(bytes(raw))
        with pytest.raises(ModelVersionError):
            load_model(path)

    def test_text_export_shape(self):
        model = random_model(np.random.default_rng(10))
        doc = model_to_dict(model)
        assert doc["format"] == "fuzzyboost-model"
        assert len(doc["classes"]) == 3
        assert doc["classes"][0]["rules"][0]["centers"]


class TestInvariantEnforcement:
    def test_importances_must_sum_to_one(self):
        bad = (rule_at([0.0], importance=0.4), rule_at([1.0], importance=0.4))
        with pytest.raises(ValueError, match="importances"):
            ClassEnsemble("a", bad)

    def test_model_requires_unique_names(self):
        ens = single_rule_ensemble("a", [0.0])
        with pytest.raises(ValueError, match="duplicate"):
            MultiClassModel((ens, single_rule_ensemble("a", [1.0])))

    def test_model_requires_shared_dimensionality(self):
        with pytest.raises(DimensionMismatchError):
            MultiClassModel(
                (single_rule_ensemble("a", [0.0]), single_rule_ensemble("b", [0.0, 1.0]))
            )

    def test_empty_model_rejected(self):
        with pytest.raises(ValueError):
            MultiClassModel(())
