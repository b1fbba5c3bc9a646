"""Bag-of-features comparison pipeline.

Visual dictionary via seeded k-means++ over all training descriptors,
per-image L1-normalized histograms of nearest-word assignments, and a
one-vs-rest kernel classifier over the chi-square kernel
``exp(-gamma * sum((a-b)^2 / (a+b)))``.

The classifier is kernel ridge regression (regularized least squares on the
precomputed kernel matrix) rather than an SMO-trained SVM: same kernel
geometry, deterministic, and a fraction of the solver surface. Reports
produced from this pipeline carry that note in their header.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _binio
from .descriptors import DatasetManifest, ImageDescriptors, load_split
from .errors import (
    BaselineError,
    DegenerateKernelError,
    DimensionMismatchError,
    ModelCorruptError,
    ProtocolError,
)

BASELINE_MAGIC = b"FBBL"
BASELINE_VERSION = 1

DEFAULT_DICTIONARY_SIZES = (200, 250, 300, 350, 400)
DEFAULT_RIDGE_LAMBDA = 1e-3
KMEANS_MAX_ITER = 100
KMEANS_REL_TOL = 1e-6

SOLVER_NOTE = (
    "baseline classifier is kernel ridge regression over the chi-square kernel, "
    "not an SMO-trained SVM"
)


@dataclass(frozen=True)
class Dictionary:
    """K visual words: centroids over training descriptors."""

    words: np.ndarray  # (K, N) float64

    def __post_init__(self) -> None:
        words = np.ascontiguousarray(self.words, dtype=np.float64)
        if words.ndim != 2 or words.shape[0] < 2:
            raise BaselineError(f"dictionary needs >= 2 words, got shape {words.shape}")
        if not np.isfinite(words).all():
            raise BaselineError("dictionary centroids must be finite")
        words.flags.writeable = False
        object.__setattr__(self, "words", words)

    @property
    def size(self) -> int:
        return self.words.shape[0]

    @property
    def dimensionality(self) -> int:
        return self.words.shape[1]


def _sq_distances_to(data: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # |x-c|^2 expanded via matmul; clip tiny negatives from cancellation.
    d2 = (
        (data * data).sum(axis=1)[:, np.newaxis]
        - 2.0 * data @ centroids.T
        + (centroids * centroids).sum(axis=1)[np.newaxis, :]
    )
    return np.maximum(d2, 0.0)


def _kmeans_pp_init(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centroids = np.empty((k, data.shape[1]))
    centroids[0] = data[rng.integers(data.shape[0])]
    closest = ((data - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            raise BaselineError("k-means++ ran out of distinct points")
        idx = rng.choice(data.shape[0], p=closest / total)
        centroids[j] = data[idx]
        closest = np.minimum(closest, ((data - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans(
    data: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iter: int = KMEANS_MAX_ITER,
    rel_tol: float = KMEANS_REL_TOL,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Lloyd iterations with k-means++ seeding.

    Returns (centroids, assignments, per-iteration objectives). The objective
    sequence is non-increasing; iteration stops on the relative-improvement
    tolerance or the iteration cap.
    """
    centroids = _kmeans_pp_init(data, k, rng)
    objectives: list[float] = []
    assign = np.zeros(data.shape[0], dtype=np.intp)
    for _ in range(max_iter):
        d2 = _sq_distances_to(data, centroids)
        assign = d2.argmin(axis=1)
        obj = float(d2[np.arange(data.shape[0]), assign].sum())
        objectives.append(obj)
        if len(objectives) >= 2:
            prev = objectives[-2]
            if prev - obj <= rel_tol * max(prev, 1e-300):
                break
        new_centroids = np.empty_like(centroids)
        empty = []
        for j in range(k):
            members = data[assign == j]
            if len(members):
                new_centroids[j] = members.mean(axis=0)
            else:
                empty.append(j)
        # Reseed empty clusters on the points currently worst-served.
        if empty:
            worst = np.argsort(-d2[np.arange(data.shape[0]), assign])
            for slot, j in enumerate(empty):
                new_centroids[j] = data[worst[slot]]
        centroids = new_centroids
    return centroids, assign, objectives


def build_dictionary(descriptors, k: int, seed: int | np.random.Generator) -> Dictionary:
    """Cluster training descriptors into a k-word dictionary, deterministically."""
    data = np.asarray(descriptors, dtype=np.float64)
    if data.ndim != 2:
        raise BaselineError(f"descriptor pool must be 2-D, got shape {data.shape}")
    if np.unique(data, axis=0).shape[0] < k:
        raise BaselineError(
            f"need at least {k} distinct descriptors, got {np.unique(data, axis=0).shape[0]}"
        )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    centroids, _, _ = kmeans(data, k, rng)
    return Dictionary(words=centroids)


def nearest_word(descriptors: np.ndarray, dictionary: Dictionary) -> np.ndarray:
    """Index of the nearest centroid per descriptor (Euclidean, lowest-index ties)."""
    diff = descriptors[:, np.newaxis, :].astype(np.float64) - dictionary.words[np.newaxis, :, :]
    return (diff * diff).sum(axis=2).argmin(axis=1)


def encode(image: ImageDescriptors, dictionary: Dictionary) -> np.ndarray:
    """L1-normalized histogram of word assignments for one image."""
    if image.dimensionality != dictionary.dimensionality:
        raise DimensionMismatchError(
            f"image {image.image_id!r} dimensionality {image.dimensionality} "
            f"does not match dictionary {dictionary.dimensionality}"
        )
    counts = np.bincount(
        nearest_word(image.descriptors, dictionary), minlength=dictionary.size
    ).astype(np.float64)
    return counts / counts.sum()


def chi_square_distance(h1: np.ndarray, h2: np.ndarray) -> float:
    """sum (a-b)^2/(a+b) over bins; zero-denominator bins contribute 0."""
    h1 = np.asarray(h1, dtype=np.float64)
    h2 = np.asarray(h2, dtype=np.float64)
    if h1.shape != h2.shape:
        raise DimensionMismatchError(f"histogram shapes differ: {h1.shape} vs {h2.shape}")
    num = (h1 - h2) ** 2
    den = h1 + h2
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(terms.sum())


def chi_square_kernel(h1: np.ndarray, h2: np.ndarray, gamma: float = 1.0) -> float:
    return float(np.exp(-gamma * chi_square_distance(h1, h2)))


def _chi_square_cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise chi-square distances between histogram rows of a and b."""
    out = np.empty((a.shape[0], b.shape[0]))
    for i, row in enumerate(a):
        num = (row[np.newaxis, :] - b) ** 2
        den = row[np.newaxis, :] + b
        out[i] = np.divide(num, den, out=np.zeros_like(num), where=den > 0).sum(axis=1)
    return out


def mean_pairwise_distance(histograms: np.ndarray) -> float:
    dists = _chi_square_cross(histograms, histograms)
    n = histograms.shape[0]
    if n < 2:
        return 0.0
    return float(dists.sum() / (n * (n - 1)))  # diagonal is zero


@dataclass(frozen=True)
class BaselineModel:
    """Dictionary, training histograms and per-class dual coefficients."""

    classes: tuple[str, ...]
    dictionary: Dictionary
    train_histograms: np.ndarray  # (n_train, K)
    dual_coef: np.ndarray  # (n_train, V)
    gamma: float
    ridge_lambda: float

    @property
    def dimensionality(self) -> int:
        return self.dictionary.dimensionality


def train_baseline(
    manifest: DatasetManifest,
    k: int,
    seed: int = 0,
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA,
    cache: dict[str, ImageDescriptors] | None = None,
) -> BaselineModel:
    """Dictionary + histograms + one-vs-rest kernel ridge over the train split."""
    train = cache if cache is not None else load_split(manifest, "train")
    images = [train[img.image_id] for img in manifest.subset(split="train")]
    if not images:
        raise ProtocolError("train split is empty")
    for cls in manifest.classes:
        if not any(img.class_label == cls for img in images):
            raise ProtocolError(f"class {cls!r} has no train images")
    rng = np.random.default_rng(seed)
    pool = np.concatenate([img.descriptors for img in images]).astype(np.float64)
    dictionary = build_dictionary(pool, k, rng)
    histograms = np.stack([encode(img, dictionary) for img in images])

    mean_dist = mean_pairwise_distance(histograms)
    gamma = 1.0 / mean_dist if mean_dist > 0 else 1.0

    kernel = np.exp(-gamma * _chi_square_cross(histograms, histograms))
    labels = np.array([img.class_label for img in images])
    targets = np.stack(
        [np.where(labels == cls, 1.0, -1.0) for cls in manifest.classes], axis=1
    )
    system = kernel + ridge_lambda * np.eye(kernel.shape[0])
    try:
        dual_coef = np.linalg.solve(system, targets)
    except np.linalg.LinAlgError as exc:
        raise DegenerateKernelError(
            f"kernel system unsolvable at lambda={ridge_lambda}: {exc}"
        ) from exc
    return BaselineModel(
        classes=tuple(manifest.classes),
        dictionary=dictionary,
        train_histograms=histograms,
        dual_coef=dual_coef,
        gamma=gamma,
        ridge_lambda=ridge_lambda,
    )


def decision_values(model: BaselineModel, image: ImageDescriptors) -> dict[str, float]:
    hist = encode(image, model.dictionary)
    kvec = np.exp(
        -model.gamma * _chi_square_cross(hist[np.newaxis, :], model.train_histograms)[0]
    )
    values = kvec @ model.dual_coef
    return dict(zip(model.classes, values.tolist()))


def classify_baseline(model: BaselineModel, image: ImageDescriptors) -> str:
    """Predicted class: argmax decision value, lexicographic tie-break."""
    values = decision_values(model, image)
    best = max(values.values())
    return sorted(name for name, v in values.items() if v == best)[0]


# --- serialization -------------------------------------------------------------


def save_baseline(model: BaselineModel, path: str | Path) -> None:
    n_train = model.train_histograms.shape[0]
    parts = [
        struct.pack(
            "<IIddII",
            model.dimensionality,
            model.dictionary.size,
            model.gamma,
            model.ridge_lambda,
            len(model.classes),
            n_train,
        )
    ]
    parts.extend(_binio.pack_string(c) for c in model.classes)
    parts.append(model.dictionary.words.astype("<f8").tobytes())
    parts.append(model.train_histograms.astype("<f8").tobytes())
    parts.append(model.dual_coef.astype("<f8").tobytes())
    _binio.write_checksummed(path, BASELINE_MAGIC, BASELINE_VERSION, b"".join(parts))


def load_baseline(path: str | Path) -> BaselineModel:
    payload = _binio.read_checksummed(path, BASELINE_MAGIC, BASELINE_VERSION)
    cur = _binio.Cursor(payload, str(path))
    n, k, gamma, ridge_lambda, v, n_train = struct.unpack("<IIddII", cur.take(32))
    classes = tuple(cur.string() for _ in range(v))
    words = cur.f64_array(k * n).reshape(k, n)
    histograms = cur.f64_array(n_train * k).reshape(n_train, k)
    dual_coef = cur.f64_array(n_train * v).reshape(n_train, v)
    cur.done()
    if len(set(classes)) != len(classes):
        raise ModelCorruptError(f"{path}: duplicate class names")
    return BaselineModel(
        classes=classes,
        dictionary=Dictionary(words=words),
        train_histograms=histograms,
        dual_coef=dual_coef,
        gamma=gamma,
        ridge_lambda=ridge_lambda,
    )
