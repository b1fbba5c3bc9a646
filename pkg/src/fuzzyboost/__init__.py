"""Boosted fuzzy-rule classification of local-feature image descriptors.

Library layout mirrors the pipeline: ``descriptors`` (data model and file
formats), ``rules`` (the Gaussian fuzzy weak classifier), ``boosting``
(per-class trainer), ``ensemble`` (multi-class model and query scoring),
``baseline`` (bag-of-features comparison system), ``evaluation`` (reports
and benchmark), ``synthetic`` (test data) and ``cli``.
"""

from .boosting import Metric, TrainConfig, train_class, train_model
from .descriptors import (
    DatasetManifest,
    ImageDescriptors,
    NegativePolicy,
    load_manifest,
    read_descriptor_file,
    save_manifest,
    write_descriptor_file,
)
from .ensemble import (
    ClassEnsemble,
    ClassificationResult,
    MultiClassModel,
    add_class,
    classify,
    load_model,
    save_model,
)
from .errors import FuzzyBoostError
from .rules import FuzzyRule, GaussianMF, TConorm, TNorm, fit_rule

__version__ = "0.1.0"

__all__ = [
    "ClassEnsemble",
    "ClassificationResult",
    "DatasetManifest",
    "FuzzyBoostError",
    "FuzzyRule",
    "GaussianMF",
    "ImageDescriptors",
    "Metric",
    "MultiClassModel",
    "NegativePolicy",
    "TConorm",
    "TNorm",
    "TrainConfig",
    "add_class",
    "classify",
    "fit_rule",
    "load_manifest",
    "load_model",
    "read_descriptor_file",
    "save_manifest",
    "save_model",
    "train_class",
    "train_model",
    "write_descriptor_file",
]
