"""Synthetic descriptor datasets for tests, benchmarks and demos.

Each class is an isotropic Gaussian cluster in descriptor space; cluster
centers sit on separate coordinate axes at ``separation * spread``, so the
distance between any two centers is ``separation * spread * sqrt(2)``.
Large separation gives a cleanly separable problem, small separation an
overlapping one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .descriptors import (
    DatasetManifest,
    ImageDescriptors,
    ManifestImage,
    save_manifest,
    write_descriptor_file,
)


@dataclass(frozen=True)
class SyntheticSpec:
    classes: tuple[str, ...] = ("bus", "cat", "train")
    train_per_class: int = 30
    test_per_class: int = 10
    descriptors_per_image: int = 20
    dimensionality: int = 16
    spread: float = 1.0
    separation: float = 6.0
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.classes) > self.dimensionality:
            raise ValueError("need dimensionality >= number of classes for axis placement")


def class_centers(spec: SyntheticSpec) -> np.ndarray:
    centers = np.zeros((len(spec.classes), spec.dimensionality))
    for c in range(len(spec.classes)):
        centers[c, c] = spec.separation * spec.spread
    return centers


def generate_images(
    spec: SyntheticSpec,
) -> tuple[list[ImageDescriptors], list[ImageDescriptors]]:
    """In-memory (train, test) image lists, deterministic for a given spec."""
    rng = np.random.default_rng(spec.seed)
    centers = class_centers(spec)
    train: list[ImageDescriptors] = []
    test: list[ImageDescriptors] = []
    for c, cls in enumerate(spec.classes):
        for split, count, sink in (("train", spec.train_per_class, train),
                                   ("test", spec.test_per_class, test)):
            for i in range(count):
                desc = rng.normal(
                    centers[c], spec.spread,
                    size=(spec.descriptors_per_image, spec.dimensionality),
                ).astype(np.float32)
                sink.append(
                    ImageDescriptors(
                        image_id=f"{cls}-{split}-{i:03d}",
                        descriptors=desc,
                        class_label=cls,
                    )
                )
    return train, test


def write_dataset(spec: SyntheticSpec, out_dir: str | Path) -> Path:
    """Write descriptor files plus a manifest under ``out_dir``; returns the manifest path."""
    out_dir = Path(out_dir)
    desc_dir = out_dir / "descriptors"
    desc_dir.mkdir(parents=True, exist_ok=True)
    train, test = generate_images(spec)
    entries = []
    for split, images in (("train", train), ("test", test)):
        for img in images:
            rel = f"descriptors/{img.image_id}.fbds"
            write_descriptor_file(img, out_dir / rel)
            entries.append(
                ManifestImage(
                    image_id=img.image_id,
                    class_label=img.class_label,
                    path=rel,
                    split=split,
                )
            )
    manifest = DatasetManifest(
        classes=spec.classes,
        dimensionality=spec.dimensionality,
        images=tuple(entries),
    )
    manifest_path = out_dir / "manifest.json"
    save_manifest(manifest, manifest_path)
    return manifest_path


def separable_spec(seed: int = 0, **overrides) -> SyntheticSpec:
    """3 classes, 30/10 train/test images, 20 descriptors, N=16, 6-sigma separation."""
    return replace(SyntheticSpec(seed=seed), **overrides)


def overlapping_spec(seed: int = 0, **overrides) -> SyntheticSpec:
    """Like separable_spec but clusters close enough that rules make errors."""
    return replace(
        SyntheticSpec(seed=seed, separation=2.0, train_per_class=12, test_per_class=4),
        **overrides,
    )
