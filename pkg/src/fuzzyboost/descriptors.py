"""Descriptor data model, on-disk formats, dataset manifests and learning sets.

Two interchangeable descriptor file formats are supported:

* binary (preferred): magic ``FBDS``, u8 version=1, u32 dimensionality N,
  u32 record count, then ``count * N`` little-endian float32 values.
* CSV (debugging): first line ``N=<int>``, then one descriptor per line as
  comma-separated decimals.

Descriptor components are stored as 32-bit floats; all training math runs in
64-bit. Values round-trip bit-exactly through both formats.

The manifest is a JSON file listing classes, images (id, class, descriptor
file path, train/test split) and the dataset dimensionality; see
``docs/formats.md``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyDescriptorsError,
    LearningSetError,
    MalformedHeaderError,
    ManifestError,
    NonFiniteValueError,
)

FBDS_MAGIC = b"FBDS"
FBDS_VERSION = 1
_HEADER = struct.Struct("<4sBII")

TRAIN = "train"
TEST = "test"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ImageDescriptors:
    """All local-feature descriptors of one image.

    ``descriptors`` is a read-only (count, N) float32 array; every row is one
    keypoint descriptor. Instances are immutable and safe to share across
    threads.
    """

    image_id: str
    descriptors: np.ndarray
    class_label: str | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.descriptors, dtype=np.float32)
        if arr.ndim != 2:
            raise DimensionMismatchError(
                f"image {self.image_id!r}: descriptor array must be 2-D, got shape {arr.shape}"
            )
        if arr.shape[0] == 0:
            raise EmptyDescriptorsError(f"image {self.image_id!r}: empty descriptor list")
        if arr.shape[1] < 1:
            raise DimensionMismatchError(f"image {self.image_id!r}: dimensionality must be >= 1")
        if not np.isfinite(arr).all():
            bad = int(np.argwhere(~np.isfinite(arr).all(axis=1))[0, 0])
            raise NonFiniteValueError(
                f"image {self.image_id!r}: non-finite value in record {bad}"
            )
        object.__setattr__(self, "descriptors", _freeze(arr))

    @property
    def count(self) -> int:
        return self.descriptors.shape[0]

    @property
    def dimensionality(self) -> int:
        return self.descriptors.shape[1]


def write_descriptor_file(image: ImageDescriptors, path: str | Path, fmt: str = "binary") -> None:
    """Write ``image`` to ``path``; ``fmt`` is ``"binary"`` or ``"csv"``."""
    path = Path(path)
    arr = image.descriptors
    if fmt == "binary":
        header = _HEADER.pack(FBDS_MAGIC, FBDS_VERSION, arr.shape[1], arr.shape[0])
        payload = arr.astype("<f4", copy=False).tobytes()
        path.write_bytes(header + payload)
    elif fmt == "csv":
        lines = [f"N={arr.shape[1]}"]
        for row in arr:
            lines.append(",".join(repr(float(v)) for v in row))
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown descriptor file format {fmt!r}")


def read_descriptor_file(
    path: str | Path,
    image_id: str | None = None,
    class_label: str | None = None,
    expected_n: int | None = None,
) -> ImageDescriptors:
    """Read and validate a descriptor file (binary or CSV, sniffed by content).

    ``expected_n`` enforces the dataset's declared dimensionality.
    """
    path = Path(path)
    if image_id is None:
        image_id = path.stem
    raw = path.read_bytes()
    if raw[:4] == FBDS_MAGIC:
        arr = _parse_binary(raw, path)
    elif raw[:2] == b"N=":
        arr = _parse_csv(raw, path)
    else:
        raise MalformedHeaderError(f"{path}: not a descriptor file (bad magic)")
    if expected_n is not None and arr.shape[1] != expected_n:
        raise DimensionMismatchError(
            f"{path}: dimensionality {arr.shape[1]} does not match expected {expected_n}"
        )
    if arr.shape[0] == 0:
        raise EmptyDescriptorsError(f"{path}: empty descriptor list")
    finite_rows = np.isfinite(arr).all(axis=1)
    if not finite_rows.all():
        bad = int(np.argmin(finite_rows))
        raise NonFiniteValueError(f"{path}: non-finite value in record {bad}")
    return ImageDescriptors(image_id=image_id, descriptors=arr, class_label=class_label)


def _parse_binary(raw: bytes, path: Path) -> np.ndarray:
    if len(raw) < _HEADER.size:
        raise MalformedHeaderError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, n, count = _HEADER.unpack_from(raw)
    if version != FBDS_VERSION:
        raise MalformedHeaderError(f"{path}: unsupported version {version}")
    if n < 1:
        raise MalformedHeaderError(f"{path}: dimensionality {n} in header must be >= 1")
    payload = raw[_HEADER.size:]
    expected = 4 * n * count
    if len(payload) != expected:
        have = len(payload) // (4 * n)
        raise MalformedHeaderError(
            f"{path}: payload holds {have} complete records, header promises {count}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(count, n)


def _parse_csv(raw: bytes, path: Path) -> np.ndarray:
    lines = [ln for ln in raw.decode("utf-8").splitlines() if ln.strip()]
    header = lines[0]
    try:
        n = int(header.split("=", 1)[1])
    except (IndexError, ValueError) as exc:
        raise MalformedHeaderError(f"{path}: bad CSV header {header!r}") from exc
    if n < 1:
        raise MalformedHeaderError(f"{path}: dimensionality {n} in header must be >= 1")
    rows = []
    for rec, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != n:
            raise DimensionMismatchError(
                f"{path}: record {rec} has {len(parts)} values, expected {n}"
            )
        try:
            rows.append(np.array([np.float32(p) for p in parts], dtype=np.float32))
        except ValueError as exc:
            raise MalformedHeaderError(f"{path}: record {rec} is not numeric") from exc
    if not rows:
        return np.empty((0, n), dtype=np.float32)
    return np.stack(rows)


# --- manifest -----------------------------------------------------------------

MANIFEST_FORMAT = "fuzzyboost-manifest"
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class ManifestImage:
    image_id: str
    class_label: str
    path: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    """Dataset description: classes, dimensionality, images and their splits."""

    classes: tuple[str, ...]
    dimensionality: int
    images: tuple[ManifestImage, ...]

    def __post_init__(self) -> None:
        if not self.classes:
            raise ManifestError("manifest declares no classes")
        if len(set(self.classes)) != len(self.classes):
            raise ManifestError("duplicate class names in manifest")
        if self.dimensionality < 1:
            raise ManifestError(f"dimensionality must be >= 1, got {self.dimensionality}")
        seen: set[str] = set()
        for img in self.images:
            if img.class_label not in self.classes:
                raise ManifestError(
                    f"image {img.image_id!r} has unknown class {img.class_label!r}"
                )
            if img.split not in (TRAIN, TEST):
                raise ManifestError(f"image {img.image_id!r} has invalid split {img.split!r}")
            if img.image_id in seen:
                raise ManifestError(f"duplicate image id {img.image_id!r}")
            seen.add(img.image_id)

    def subset(self, split: str | None = None, class_label: str | None = None) -> tuple[ManifestImage, ...]:
        out = self.images
        if split is not None:
            out = tuple(i for i in out if i.split == split)
        if class_label is not None:
            out = tuple(i for i in out if i.class_label == class_label)
        return out

    def with_images(self, images: Iterable[ManifestImage]) -> "DatasetManifest":
        return DatasetManifest(self.classes, self.dimensionality, tuple(images))


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    doc = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "dimensionality": manifest.dimensionality,
        "classes": list(manifest.classes),
        "images": [
            {"id": i.image_id, "class": i.class_label, "path": i.path, "split": i.split}
            for i in manifest.images
        ],
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load a manifest; relative descriptor paths resolve against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON: {exc}") from exc
    if doc.get("format") != MANIFEST_FORMAT:
        raise ManifestError(f"{path}: not a fuzzyboost manifest")
    if doc.get("version") != MANIFEST_VERSION:
        raise ManifestError(f"{path}: unsupported manifest version {doc.get('version')}")
    base = path.parent
    images = []
    for entry in doc.get("images", []):
        p = Path(entry["path"])
        if not p.is_absolute():
            p = base / p
        images.append(
            ManifestImage(
                image_id=str(entry["id"]),
                class_label=str(entry["class"]),
                path=str(p),
                split=str(entry["split"]),
            )
        )
    return DatasetManifest(
        classes=tuple(doc.get("classes", [])),
        dimensionality=int(doc["dimensionality"]),
        images=tuple(images),
    )


def load_images(
    manifest: DatasetManifest,
    images: Sequence[ManifestImage],
    cache: Mapping[str, ImageDescriptors] | None = None,
) -> list[ImageDescriptors]:
    """Load descriptor files for ``images``, honoring an optional preloaded cache."""
    out = []
    for img in images:
        if cache is not None and img.image_id in cache:
            got = cache[img.image_id]
            if got.dimensionality != manifest.dimensionality:
                raise DimensionMismatchError(
                    f"cached image {img.image_id!r} has dimensionality "
                    f"{got.dimensionality}, manifest declares {manifest.dimensionality}"
                )
            if got.class_label != img.class_label:
                got = replace(got, class_label=img.class_label)
            out.append(got)
        else:
            out.append(
                read_descriptor_file(
                    img.path,
                    image_id=img.image_id,
                    class_label=img.class_label,
                    expected_n=manifest.dimensionality,
                )
            )
    return out


def load_split(
    manifest: DatasetManifest, split: str = TRAIN
) -> dict[str, ImageDescriptors]:
    """Load every descriptor file of one split into an id-keyed cache."""
    return {
        img.image_id: read_descriptor_file(
            img.path,
            image_id=img.image_id,
            class_label=img.class_label,
            expected_n=manifest.dimensionality,
        )
        for img in manifest.subset(split=split)
    }


# --- learning-set assembly ------------------------------------------------------


@dataclass(frozen=True)
class NegativePolicy:
    """How many negative images to draw: a fixed count or a fraction of the pool."""

    count: int | None = None
    fraction: float | None = None

    def __post_init__(self) -> None:
        if (self.count is None) == (self.fraction is None):
            raise ValueError("exactly one of count/fraction must be set")
        if self.count is not None and self.count < 1:
            raise ValueError(f"negative count must be >= 1, got {self.count}")
        if self.fraction is not None and not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"negative fraction must be in (0, 1], got {self.fraction}")

    def resolve(self, pool_size: int) -> int:
        if self.count is not None:
            if self.count > pool_size:
                raise LearningSetError(
                    f"policy requests {self.count} negative images, pool has {pool_size}"
                )
            return self.count
        return max(1, min(pool_size, round(self.fraction * pool_size)))

    def describe(self) -> str:
        return f"count={self.count}" if self.count is not None else f"fraction={self.fraction}"


DEFAULT_NEGATIVE_POLICY = NegativePolicy(count=17)


def select_learning_images(
    manifest: DatasetManifest,
    target_class: str,
    policy: NegativePolicy,
    seed: int | np.random.Generator,
) -> tuple[tuple[ManifestImage, ...], tuple[ManifestImage, ...]]:
    """Pick positive and negative manifest entries without touching the disk.

    Positives are every train image of ``target_class`` in manifest order.
    Negatives are drawn uniformly without replacement from the other classes'
    train images, deterministically for a given seed.
    """
    if target_class not in manifest.classes:
        raise ManifestError(f"unknown class {target_class!r}")
    positives = manifest.subset(split=TRAIN, class_label=target_class)
    if not positives:
        raise LearningSetError(f"class {target_class!r} has no train images")
    pool = tuple(
        i for i in manifest.subset(split=TRAIN) if i.class_label != target_class
    )
    if not pool:
        raise LearningSetError(f"negative pool for class {target_class!r} is empty")
    k = policy.resolve(len(pool))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    chosen = rng.choice(len(pool), size=k, replace=False)
    negatives = tuple(pool[int(i)] for i in sorted(chosen))
    return positives, negatives


def assemble_learning_set(
    manifest: DatasetManifest,
    target_class: str,
    policy: NegativePolicy = DEFAULT_NEGATIVE_POLICY,
    seed: int | np.random.Generator = 0,
    cache: Mapping[str, ImageDescriptors] | None = None,
) -> tuple[list[ImageDescriptors], list[ImageDescriptors]]:
    """Assemble (positives, negatives) for one class per the sampling policy."""
    pos_imgs, neg_imgs = select_learning_images(manifest, target_class, policy, seed)
    positives = load_images(manifest, pos_imgs, cache)
    negatives = load_images(manifest, neg_imgs, cache)
    return positives, negatives
