"""Gaussian fuzzy rules: the weak classifier.

A rule is a conjunction of N one-dimensional Gaussian membership functions.
Fitting takes the matrix of matched descriptors (one nearest descriptor per
positive image) and, per column, places the Gaussian center halfway between
the column minimum and maximum with a width chosen so membership is 0.5 at
both extremes. The rule therefore fires (activation >= 1/2 under the minimum
t-norm) on every row it was built from.

Evaluation rewrites the t-norm over memberships as a single exponential:
``min_n exp(-z_n^2) == exp(-max_n z_n^2)`` and
``prod_n exp(-z_n^2) == exp(-sum_n z_n^2)``, so the hot path computes one
``exp`` per descriptor instead of N. The minimum-t-norm form is bit-identical
to the naive fold; the product form only differs by normal rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import DimensionMismatchError

# Width divisor from the half-membership constraint: G(m +- d/2) = 0.5.
WIDTH_DIVISOR = 2.0 * math.sqrt(-math.log(0.5))

# Rounding through sigma = d / WIDTH_DIVISOR can leave boundary memberships a
# few ulps below 0.5 (observed worst ~1.3e-13). The decision threshold keeps
# the inclusive ">= 1/2" boundary robust to that rounding so a rule always
# fires on its own construction rows.
DECISION_TOLERANCE = 1e-12
DECISION_THRESHOLD = 0.5 - DECISION_TOLERANCE


class TNorm(str, Enum):
    """Fuzzy AND used to combine per-dimension memberships."""

    MINIMUM = "minimum"
    PRODUCT = "product"


class TConorm(str, Enum):
    """Fuzzy OR used to combine per-descriptor rule activations."""

    MAXIMUM = "maximum"
    PROBABILISTIC_SUM = "probabilistic_sum"


#: Conorm conventionally paired with each t-norm (dual operators).
DUAL_CONORM = {
    TNorm.MINIMUM: TConorm.MAXIMUM,
    TNorm.PRODUCT: TConorm.PROBABILISTIC_SUM,
}


@dataclass(frozen=True)
class GaussianMF:
    """One-dimensional Gaussian membership function exp(-((x-center)/width)^2)."""

    center: float
    width: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.center):
            raise ValueError(f"center must be finite, got {self.center}")
        if not (math.isfinite(self.width) and self.width > 0):
            raise ValueError(f"width must be finite and > 0, got {self.width}")

    def membership(self, x):
        z = (np.asarray(x, dtype=np.float64) - self.center) / self.width
        return np.exp(-(z * z))


def membership(mf: GaussianMF, x):
    return mf.membership(x)


@dataclass(frozen=True)
class SigmaFloor:
    """Width floor for degenerate columns (zero value spread)."""

    absolute: float = 1e-3
    relative: float = 1e-6

    def floor_for(self, centers: np.ndarray) -> np.ndarray:
        return np.maximum(self.absolute, self.relative * np.abs(centers))


DEFAULT_SIGMA_FLOOR = SigmaFloor()


@dataclass(frozen=True)
class FuzzyRule:
    """One weak classifier: N Gaussian membership functions plus boosting weights.

    ``raw_alpha`` is the boosting quality weight assigned by the trainer;
    ``importance`` is its ensemble-normalized value (importances of one class
    ensemble sum to 1 after training).
    """

    centers: np.ndarray
    widths: np.ndarray
    importance: float = 0.0
    raw_alpha: float = 0.0

    def __post_init__(self) -> None:
        centers = np.ascontiguousarray(self.centers, dtype=np.float64)
        widths = np.ascontiguousarray(self.widths, dtype=np.float64)
        if centers.ndim != 1 or widths.shape != centers.shape:
            raise DimensionMismatchError(
                f"centers/widths must be equal-length vectors, got {centers.shape} and {widths.shape}"
            )
        if centers.size == 0:
            raise DimensionMismatchError("rule must cover at least one dimension")
        if not np.isfinite(centers).all():
            raise ValueError("rule centers must be finite")
        if not (np.isfinite(widths).all() and (widths > 0).all()):
            raise ValueError("rule widths must be finite and > 0")
        if not (math.isfinite(self.importance) and self.importance >= 0):
            raise ValueError(f"importance must be finite and >= 0, got {self.importance}")
        if not math.isfinite(self.raw_alpha):
            raise ValueError(f"raw_alpha must be finite, got {self.raw_alpha}")
        centers.flags.writeable = False
        widths.flags.writeable = False
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "widths", widths)

    @property
    def dimensionality(self) -> int:
        return self.centers.shape[0]

    @cached_property
    def membership_functions(self) -> tuple[GaussianMF, ...]:
        return tuple(
            GaussianMF(float(c), float(w)) for c, w in zip(self.centers, self.widths)
        )


def fit_rule(matched, sigma_floor: SigmaFloor = DEFAULT_SIGMA_FLOOR) -> FuzzyRule:
    """Fit Gaussian membership functions to a matched-descriptor matrix.

    Per column n: d_n = |min - max|, center = max - d_n/2, width =
    d_n / (2 sqrt(-ln 0.5)). Columns with zero spread get the configured
    width floor. Importance is left unset; the boosting driver assigns it.
    """
    matched = np.asarray(matched, dtype=np.float64)
    if matched.ndim != 2:
        raise DimensionMismatchError(f"matched matrix must be 2-D, got shape {matched.shape}")
    if matched.shape[0] < 1 or matched.shape[1] < 1:
        raise DimensionMismatchError(f"matched matrix must be non-empty, got shape {matched.shape}")
    if not np.isfinite(matched).all():
        raise ValueError("matched matrix contains non-finite values")
    lo = matched.min(axis=0)
    hi = matched.max(axis=0)
    d = np.abs(lo - hi)
    centers = hi - d / 2.0
    widths = d / WIDTH_DIVISOR
    degenerate = d == 0.0
    if degenerate.any():
        widths = np.where(degenerate, sigma_floor.floor_for(centers), widths)
    return FuzzyRule(centers=centers, widths=widths)


def _check_dim(n_rule: int, n_x: int) -> None:
    if n_rule != n_x:
        raise DimensionMismatchError(
            f"rule dimensionality {n_rule} does not match vector dimensionality {n_x}"
        )


def _as_matrix(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise DimensionMismatchError(f"expected vector or matrix, got shape {arr.shape}")
    return arr


def rule_activations(rule: FuzzyRule, x, tnorm: TNorm = TNorm.MINIMUM) -> np.ndarray:
    """Activation of ``rule`` on each row of ``x``; returns a (rows,) array."""
    mat = _as_matrix(x)
    _check_dim(rule.dimensionality, mat.shape[1])
    z = (mat - rule.centers) / rule.widths
    z2 = z * z
    if tnorm == TNorm.MINIMUM:
        agg = z2.max(axis=1)
    elif tnorm == TNorm.PRODUCT:
        agg = z2.sum(axis=1)
    else:
        raise ValueError(f"unknown t-norm {tnorm!r}")
    return np.exp(-agg)


def activation(rule: FuzzyRule, x, tnorm: TNorm = TNorm.MINIMUM) -> float:
    """Rule activation on one descriptor vector: the t-norm of all memberships."""
    return float(rule_activations(rule, x, tnorm)[0])


def weak_decisions(rule: FuzzyRule, x, tnorm: TNorm = TNorm.MINIMUM) -> np.ndarray:
    """Binary decision per row of ``x``: 1 where activation >= 1/2."""
    return (rule_activations(rule, x, tnorm) >= DECISION_THRESHOLD).astype(np.int8)


def weak_decision(rule: FuzzyRule, x, tnorm: TNorm = TNorm.MINIMUM) -> int:
    return int(weak_decisions(rule, x, tnorm)[0])
