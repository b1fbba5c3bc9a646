"""Multi-class model assembly, query scoring and model serialization.

A class ensemble scores a query image by taking, for every rule, the t-conorm
over query descriptors of the rule activation, then summing those per-rule
scores weighted by rule importance. The class with the highest score wins.

New classes are added by appending a fully trained ensemble; existing
ensembles are never touched, so prior class scores are unchanged bit for bit.

Model files are versioned binary with a sha256 checksum (magic ``FBMD``);
``model_to_dict`` provides a JSON-friendly export for inspection.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _binio
from .descriptors import ImageDescriptors
from .errors import (
    DimensionMismatchError,
    ModelAssemblyError,
    ModelCorruptError,
    ModelFormatError,
)
from .rules import DUAL_CONORM, FuzzyRule, TConorm, TNorm, rule_activations

MODEL_MAGIC = b"FBMD"
MODEL_VERSION = 1

IMPORTANCE_TOLERANCE = 1e-9

_TNORM_CODES = {TNorm.MINIMUM: 0, TNorm.PRODUCT: 1}
_TNORM_FROM_CODE = {v: k for k, v in _TNORM_CODES.items()}


def as_query_matrix(query, expected_n: int | None = None) -> np.ndarray:
    """Normalize a query (ndarray or ImageDescriptors) to a (u, N) float64 matrix."""
    if isinstance(query, ImageDescriptors):
        query = query.descriptors
    mat = np.asarray(query, dtype=np.float64)
    if mat.ndim == 1:
        mat = mat[np.newaxis, :]
    if mat.ndim != 2 or mat.shape[0] < 1:
        raise DimensionMismatchError(
            f"query must be a non-empty (u, N) matrix, got shape {mat.shape}"
        )
    if not np.isfinite(mat).all():
        raise ValueError("query contains non-finite values")
    if expected_n is not None and mat.shape[1] != expected_n:
        raise DimensionMismatchError(
            f"query dimensionality {mat.shape[1]} does not match model dimensionality {expected_n}"
        )
    return mat


def _conorm_fold(activations: np.ndarray, tconorm: TConorm, axis: int = -1) -> np.ndarray:
    if tconorm == TConorm.MAXIMUM:
        return activations.max(axis=axis)
    if tconorm == TConorm.PROBABILISTIC_SUM:
        return 1.0 - np.prod(1.0 - activations, axis=axis)
    raise ValueError(f"unknown t-conorm {tconorm!r}")


def score_rule(
    rule: FuzzyRule,
    query,
    tnorm: TNorm = TNorm.MINIMUM,
    tconorm: TConorm | None = None,
) -> float:
    """Rule response to a whole query: conorm over descriptors of the activation."""
    if tconorm is None:
        tconorm = DUAL_CONORM[tnorm]
    mat = as_query_matrix(query, rule.dimensionality)
    return float(_conorm_fold(rule_activations(rule, mat, tnorm), tconorm))


@dataclass(frozen=True)
class ClassEnsemble:
    """Ordered rules for one class with importances normalized to sum 1."""

    class_name: str
    rules: tuple[FuzzyRule, ...]
    tnorm: TNorm = TNorm.MINIMUM

    def __post_init__(self) -> None:
        if not self.rules:
            raise ValueError(f"ensemble {self.class_name!r} has no rules")
        n = self.rules[0].dimensionality
        for rule in self.rules:
            if rule.dimensionality != n:
                raise DimensionMismatchError(
                    f"ensemble {self.class_name!r}: rules disagree on dimensionality"
                )
        total = sum(r.importance for r in self.rules)
        if abs(total - 1.0) > IMPORTANCE_TOLERANCE:
            raise ValueError(
                f"ensemble {self.class_name!r}: importances sum to {total}, expected 1"
            )

    @property
    def dimensionality(self) -> int:
        return self.rules[0].dimensionality

    # Stacked views of the rule parameters for vectorized scoring.
    @cached_property
    def _centers(self) -> np.ndarray:
        return np.stack([r.centers for r in self.rules])

    @cached_property
    def _widths(self) -> np.ndarray:
        return np.stack([r.widths for r in self.rules])

    @cached_property
    def _importances(self) -> np.ndarray:
        return np.array([r.importance for r in self.rules])


def score_class(
    ensemble: ClassEnsemble,
    query,
    tconorm: TConorm | None = None,
) -> float:
    """Importance-weighted sum of rule responses; always lands in [0, 1]."""
    if tconorm is None:
        tconorm = DUAL_CONORM[ensemble.tnorm]
    mat = as_query_matrix(query, ensemble.dimensionality)
    z = (mat[np.newaxis, :, :] - ensemble._centers[:, np.newaxis, :]) / ensemble._widths[
        :, np.newaxis, :
    ]
    z2 = z * z
    if ensemble.tnorm == TNorm.MINIMUM:
        agg = z2.max(axis=2)
    else:
        agg = z2.sum(axis=2)
    per_descriptor = np.exp(-agg)  # (rules, descriptors)
    per_rule = _conorm_fold(per_descriptor, tconorm, axis=1)
    return float(ensemble._importances @ per_rule)


@dataclass(frozen=True)
class ModelMetadata:
    seed: int = 0
    config_digest: str = ""


@dataclass(frozen=True)
class MultiClassModel:
    """The deployable training artifact: one ensemble per known class."""

    ensembles: tuple[ClassEnsemble, ...]
    metadata: ModelMetadata = ModelMetadata()
    version: int = MODEL_VERSION

    def __post_init__(self) -> None:
        if not self.ensembles:
            raise ValueError("model must contain at least one class ensemble")
        names = [e.class_name for e in self.ensembles]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate class names in model: {names}")
        n = self.ensembles[0].dimensionality
        for e in self.ensembles:
            if e.dimensionality != n:
                raise DimensionMismatchError(
                    f"ensemble {e.class_name!r} has dimensionality {e.dimensionality}, expected {n}"
                )

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(e.class_name for e in self.ensembles)

    @property
    def dimensionality(self) -> int:
        return self.ensembles[0].dimensionality


@dataclass(frozen=True)
class ClassificationResult:
    predicted: str
    scores: dict[str, float]
    tie: bool = False


def classify(
    model: MultiClassModel,
    query,
    tconorm: TConorm | None = None,
) -> ClassificationResult:
    """Score every class and return the argmax with the full score vector.

    Exact score ties resolve to the lexicographically smallest class name and
    are flagged in the result.
    """
    mat = as_query_matrix(query, model.dimensionality)
    scores = {e.class_name: score_class(e, mat, tconorm) for e in model.ensembles}
    best = max(scores.values())
    tied = sorted(name for name, s in scores.items() if s == best)
    return ClassificationResult(predicted=tied[0], scores=scores, tie=len(tied) > 1)


def add_class(model: MultiClassModel, ensemble: ClassEnsemble) -> MultiClassModel:
    """Extend a model with a newly trained class; existing ensembles are reused as-is."""
    if ensemble.class_name in model.classes:
        raise ModelAssemblyError(f"model already contains class {ensemble.class_name!r}")
    if ensemble.dimensionality != model.dimensionality:
        raise DimensionMismatchError(
            f"new ensemble dimensionality {ensemble.dimensionality} does not match "
            f"model dimensionality {model.dimensionality}"
        )
    return MultiClassModel(
        ensembles=model.ensembles + (ensemble,),
        metadata=model.metadata,
        version=model.version,
    )


# --- serialization -------------------------------------------------------------


def ensemble_to_bytes(ensemble: ClassEnsemble) -> bytes:
    """Canonical byte encoding of one ensemble (stable across process runs)."""
    parts = [
        _binio.pack_string(ensemble.class_name),
        struct.pack("<B", _TNORM_CODES[ensemble.tnorm]),
        struct.pack("<I", len(ensemble.rules)),
    ]
    for rule in ensemble.rules:
        parts.append(struct.pack("<dd", rule.raw_alpha, rule.importance))
        parts.append(rule.centers.astype("<f8").tobytes())
        parts.append(rule.widths.astype("<f8").tobytes())
    return b"".join(parts)


def save_model(model: MultiClassModel, path: str | Path) -> None:
    payload = [
        struct.pack("<I", model.dimensionality),
        struct.pack("<q", model.metadata.seed),
        _binio.pack_string(model.metadata.config_digest),
        struct.pack("<I", len(model.ensembles)),
    ]
    payload.extend(ensemble_to_bytes(e) for e in model.ensembles)
    _binio.write_checksummed(path, MODEL_MAGIC, MODEL_VERSION, b"".join(payload))


def load_model(path: str | Path) -> MultiClassModel:
    payload = _binio.read_checksummed(path, MODEL_MAGIC, MODEL_VERSION)
    cur = _binio.Cursor(payload, str(path))
    n = cur.u32()
    seed = cur.i64()
    digest = cur.string()
    count = cur.u32()
    ensembles = []
    for _ in range(count):
        name = cur.string()
        code = cur.u8()
        if code not in _TNORM_FROM_CODE:
            raise ModelFormatError(f"{path}: unknown t-norm code {code}")
        tnorm = _TNORM_FROM_CODE[code]
        t_rules = cur.u32()
        if t_rules == 0:
            raise ModelCorruptError(f"{path}: ensemble {name!r} has no rules")
        rules = []
        for _ in range(t_rules):
            raw_alpha = cur.f64()
            importance = cur.f64()
            centers = cur.f64_array(n)
            widths = cur.f64_array(n)
            rules.append(
                FuzzyRule(
                    centers=centers,
                    widths=widths,
                    importance=importance,
                    raw_alpha=raw_alpha,
                )
            )
        ensembles.append(ClassEnsemble(class_name=name, rules=tuple(rules), tnorm=tnorm))
    cur.done()
    return MultiClassModel(
        ensembles=tuple(ensembles),
        metadata=ModelMetadata(seed=seed, config_digest=digest),
    )


def model_to_dict(model: MultiClassModel) -> dict:
    """JSON-friendly view of the model for the text export."""
    return {
        "format": "fuzzyboost-model",
        "version": model.version,
        "dimensionality": model.dimensionality,
        "metadata": {
            "seed": model.metadata.seed,
            "config_digest": model.metadata.config_digest,
        },
        "classes": [
            {
                "name": e.class_name,
                "tnorm": e.tnorm.value,
                "rules": [
                    {
                        "importance": r.importance,
                        "raw_alpha": r.raw_alpha,
                        "centers": r.centers.tolist(),
                        "widths": r.widths.tolist(),
                    }
                    for r in e.rules
                ],
            }
            for e in model.ensembles
        ],
    }


def save_model_text(model: MultiClassModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")
