"""Per-class AdaBoost driver over Gaussian fuzzy rules.

Each round: draw a seed descriptor from the positive pool according to the
current weight distribution, match the nearest descriptor in every positive
image, fit a rule to the matched matrix, score its weighted error over all
positive and negative descriptors, then reweight. Training stops early on a
perfect rule (error 0), on a worse-than-chance candidate (error >= 0.5,
discarded), or after ``t_max`` rounds. Rule importances are the normalized
quality weights, so they sum to 1 per class ensemble.

Progress is emitted on the ``fuzzyboost.boosting`` logger as one JSON object
per line (fields: event, class, round, epsilon, alpha, accepted, elapsed_s).
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from .descriptors import (
    DEFAULT_NEGATIVE_POLICY,
    DatasetManifest,
    ImageDescriptors,
    NegativePolicy,
    assemble_learning_set,
)
from .ensemble import ClassEnsemble
from .errors import DimensionMismatchError, TrainingError
from .rules import (
    DECISION_THRESHOLD,
    DEFAULT_SIGMA_FLOOR,
    FuzzyRule,
    SigmaFloor,
    TNorm,
    fit_rule,
    rule_activations,
)

logger = logging.getLogger("fuzzyboost.boosting")


class Metric(str, Enum):
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for one boosting run; identical configs yield identical models."""

    t_max: int = 50
    tnorm: TNorm = TNorm.MINIMUM
    seed: int = 0
    sigma_floor: SigmaFloor = DEFAULT_SIGMA_FLOOR
    metric: Metric = Metric.EUCLIDEAN
    negatives: NegativePolicy = DEFAULT_NEGATIVE_POLICY

    def __post_init__(self) -> None:
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")

    def to_dict(self) -> dict:
        return {
            "t_max": self.t_max,
            "tnorm": self.tnorm.value,
            "seed": self.seed,
            "sigma_floor_abs": self.sigma_floor.absolute,
            "sigma_floor_rel": self.sigma_floor.relative,
            "metric": self.metric.value,
            "negatives": self.negatives.describe(),
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def class_rng(seed: int, class_name: str) -> np.random.Generator:
    """Independent, reproducible random stream for one class.

    The stream is derived from (seed, sha256(class name)) via SeedSequence,
    so it does not depend on how many or in which order other classes train.
    """
    digest = hashlib.sha256(class_name.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([seed, *words]))


@dataclass
class BoostState:
    """Mutable per-class training state; not safe for concurrent mutation."""

    weights: np.ndarray
    round: int = 0
    rules_so_far: list[tuple[FuzzyRule, float]] = field(default_factory=list)


@dataclass(frozen=True)
class RoundRecord:
    """Snapshot of one boosting round, for observers and tests."""

    round: int
    epsilon: float
    alpha: float | None
    rule: FuzzyRule
    accepted: bool
    stop_reason: str | None
    matched: np.ndarray
    misclassified: np.ndarray
    weights_after: np.ndarray | None


RoundObserver = Callable[[RoundRecord], None]


@dataclass(frozen=True)
class LearningSet:
    """Flattened descriptor store: positives stacked before negatives."""

    vectors: np.ndarray  # (L, N) float64
    labels: np.ndarray  # (L,) int8; 1 for positive-image descriptors
    l_pos: int
    l_neg: int


def build_learning_set(
    positives: Sequence[ImageDescriptors], negatives: Sequence[ImageDescriptors]
) -> LearningSet:
    if not positives:
        raise TrainingError("no positive images")
    if not negatives:
        raise TrainingError("no negative images")
    n = positives[0].dimensionality
    for img in list(positives) + list(negatives):
        if img.dimensionality != n:
            raise DimensionMismatchError(
                f"image {img.image_id!r} has dimensionality {img.dimensionality}, expected {n}"
            )
    pos = np.concatenate([img.descriptors for img in positives]).astype(np.float64)
    neg = np.concatenate([img.descriptors for img in negatives]).astype(np.float64)
    vectors = np.concatenate([pos, neg])
    labels = np.concatenate(
        [np.ones(len(pos), dtype=np.int8), np.zeros(len(neg), dtype=np.int8)]
    )
    return LearningSet(vectors=vectors, labels=labels, l_pos=len(pos), l_neg=len(neg))


def init_weights(l_total: int) -> np.ndarray:
    """Uniform starting distribution 1/L over all learning vectors."""
    if l_total < 1:
        raise ValueError(f"learning set size must be >= 1, got {l_total}")
    return np.full(l_total, 1.0 / l_total)


def sample_positive(weights: np.ndarray, l_pos: int, rng: np.random.Generator) -> int:
    """Draw a positive descriptor index (0-based) from the renormalized
    positive block of the weight vector."""
    pos = weights[:l_pos]
    total = pos.sum()
    if total <= 0.0:
        raise TrainingError("all positive weights are zero")
    return int(rng.choice(l_pos, p=pos / total))


def _distances(block: np.ndarray, seed_vec: np.ndarray, metric: Metric) -> np.ndarray:
    diff = block.astype(np.float64) - seed_vec
    if metric == Metric.EUCLIDEAN:
        return (diff * diff).sum(axis=1)
    if metric == Metric.MANHATTAN:
        return np.abs(diff).sum(axis=1)
    raise ValueError(f"unknown metric {metric!r}")


def match_per_image(
    seed_vec,
    positives: Sequence[ImageDescriptors],
    metric: Metric = Metric.EUCLIDEAN,
) -> np.ndarray:
    """Nearest descriptor to ``seed_vec`` in every positive image.

    Returns an (I_pos, N) matrix with exactly one row per image; distance
    ties resolve to the lowest descriptor index within the image.
    """
    if not positives:
        raise TrainingError("no positive images to match against")
    seed_vec = np.asarray(seed_vec, dtype=np.float64)
    n = positives[0].dimensionality
    if seed_vec.shape != (n,):
        raise DimensionMismatchError(
            f"seed vector has shape {seed_vec.shape}, expected ({n},)"
        )
    rows = np.empty((len(positives), n))
    for i, img in enumerate(positives):
        if img.dimensionality != n:
            raise DimensionMismatchError(
                f"image {img.image_id!r} has dimensionality {img.dimensionality}, expected {n}"
            )
        best = int(np.argmin(_distances(img.descriptors, seed_vec, metric)))
        rows[i] = img.descriptors[best]
    return rows


def evaluate_error(
    rule: FuzzyRule,
    vectors: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    tnorm: TNorm = TNorm.MINIMUM,
) -> float:
    """Weighted error: total weight on descriptors the rule misclassifies.

    Expects ``weights`` to be a distribution (sums to 1)."""
    decisions = (rule_activations(rule, vectors, tnorm) >= DECISION_THRESHOLD).astype(np.int8)
    return float(weights[decisions != labels].sum())


def compute_alpha(epsilon: float) -> float:
    """Rule quality weight 0.5 ln((1-e)/e); requires 0 < e < 0.5."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 0.5), got {epsilon}")
    return 0.5 * math.log((1.0 - epsilon) / epsilon)


def update_weights(
    weights: np.ndarray,
    decisions: np.ndarray,
    labels: np.ndarray,
    alpha: float,
) -> np.ndarray:
    """Downweight correctly classified samples by exp(-alpha), then renormalize."""
    if not math.isfinite(alpha):
        raise ValueError(f"alpha must be finite, got {alpha}")
    correct = np.asarray(decisions) == np.asarray(labels)
    updated = weights * np.exp(-alpha * correct)
    return updated / updated.sum()


def run_boosting(
    positives: Sequence[ImageDescriptors],
    negatives: Sequence[ImageDescriptors],
    config: TrainConfig,
    class_name: str,
    rng: np.random.Generator | None = None,
    observer: RoundObserver | None = None,
) -> ClassEnsemble:
    """Boosting loop over an already-assembled learning set.

    Raises TrainingError if the very first candidate is worse than chance,
    which leaves nothing to build an ensemble from.
    """
    if rng is None:
        rng = class_rng(config.seed, class_name)
    ls = build_learning_set(positives, negatives)
    state = BoostState(weights=init_weights(ls.l_pos + ls.l_neg))
    # Cap applied when a rule is perfect (error 0, where the quality formula
    # diverges): the error is smoothed to 1/(2L), standard for AdaBoost.
    alpha_cap = compute_alpha(1.0 / (2.0 * (ls.l_pos + ls.l_neg)))
    accepted_rules: list[FuzzyRule] = []
    alphas: list[float] = []
    started = time.perf_counter()
    _emit(event="train_start", **{"class": class_name}, l_pos=ls.l_pos, l_neg=ls.l_neg)

    for t in range(1, config.t_max + 1):
        state.round = t
        round_started = time.perf_counter()
        r = sample_positive(state.weights, ls.l_pos, rng)
        matched = match_per_image(ls.vectors[r], positives, config.metric)
        rule = fit_rule(matched, config.sigma_floor)
        decisions = (
            rule_activations(rule, ls.vectors, config.tnorm) >= DECISION_THRESHOLD
        ).astype(np.int8)
        misclassified = decisions != ls.labels
        epsilon = float(state.weights[misclassified].sum())

        alpha: float | None
        stop_reason: str | None = None
        if epsilon == 0.0:
            alpha = alpha_cap
            accepted = True
            stop_reason = "perfect_rule"
        elif epsilon >= 0.5:
            alpha = None
            accepted = False
            stop_reason = "error_above_half"
        else:
            alpha = compute_alpha(epsilon)
            accepted = True

        weights_after: np.ndarray | None = None
        if accepted:
            accepted_rules.append(rule)
            alphas.append(alpha)
            state.rules_so_far.append((rule, alpha))
            if stop_reason is None:
                # One-sided form of the standard AdaBoost reweighting: the
                # doubled exponent makes exp(-2a I(h=y)) proportional to
                # exp(-a (2 I(h=y) - 1)), which splits the renormalized mass
                # evenly between correct and misclassified samples.
                state.weights = update_weights(
                    state.weights, decisions, ls.labels, 2.0 * alpha
                )
                weights_after = state.weights

        _emit(
            event="round",
            **{"class": class_name},
            round=t,
            epsilon=epsilon,
            alpha=alpha,
            accepted=accepted,
            elapsed_s=time.perf_counter() - round_started,
        )
        if observer is not None:
            observer(
                RoundRecord(
                    round=t,
                    epsilon=epsilon,
                    alpha=alpha,
                    rule=rule,
                    accepted=accepted,
                    stop_reason=stop_reason,
                    matched=matched,
                    misclassified=misclassified,
                    weights_after=None if weights_after is None else weights_after.copy(),
                )
            )
        if stop_reason is not None:
            break

    if not accepted_rules:
        raise TrainingError(
            f"class {class_name!r}: first candidate rule had error >= 0.5; no ensemble"
        )
    total_alpha = sum(alphas)
    finalized = tuple(
        replace(rule, raw_alpha=a, importance=a / total_alpha)
        for rule, a in zip(accepted_rules, alphas)
    )
    _emit(
        event="train_end",
        **{"class": class_name},
        rules=len(finalized),
        elapsed_s=time.perf_counter() - started,
    )
    return ClassEnsemble(class_name=class_name, rules=finalized, tnorm=config.tnorm)


def train_class(
    manifest: DatasetManifest,
    target_class: str,
    config: TrainConfig = TrainConfig(),
    cache: Mapping[str, ImageDescriptors] | None = None,
    observer: RoundObserver | None = None,
) -> ClassEnsemble:
    """Assemble the learning set for ``target_class`` and boost it into an ensemble."""
    rng = class_rng(config.seed, target_class)
    positives, negatives = assemble_learning_set(
        manifest, target_class, config.negatives, rng, cache
    )
    return run_boosting(positives, negatives, config, target_class, rng, observer)


def train_model(
    manifest: DatasetManifest,
    config: TrainConfig = TrainConfig(),
    classes: Sequence[str] | None = None,
    cache: Mapping[str, ImageDescriptors] | None = None,
    threads: int = 1,
):
    """Train one ensemble per class and assemble the multi-class model.

    Classes train independently (parallel when ``threads`` > 1); each gets its
    own RNG stream, so the result is identical regardless of thread count.
    """
    from .ensemble import ModelMetadata, MultiClassModel

    wanted = tuple(classes) if classes is not None else manifest.classes
    for cls in wanted:
        if cls not in manifest.classes:
            raise ValueError(f"unknown class {cls!r}; manifest has {manifest.classes}")
    if threads > 1 and len(wanted) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            ensembles = tuple(
                pool.map(lambda c: train_class(manifest, c, config, cache), wanted)
            )
    else:
        ensembles = tuple(train_class(manifest, c, config, cache) for c in wanted)
    return MultiClassModel(
        ensembles=ensembles,
        metadata=ModelMetadata(seed=config.seed, config_digest=config.digest()),
    )


def _emit(**fields) -> None:
    if logger.isEnabledFor(logging.INFO):
        logger.info(json.dumps(fields, sort_keys=True))
