import numpy as np
import pytest

from fuzzyboost.descriptors import (
    DatasetManifest,
    ImageDescriptors,
    ManifestImage,
    write_descriptor_file,
)
from fuzzyboost.synthetic import SyntheticSpec, separable_spec, write_dataset


def make_images(class_label, count, center, spread, descriptors_per_image, rng, split="train"):
    """Gaussian-cluster images around ``center``; ids encode class and index."""
    center = np.asarray(center, dtype=np.float64)
    return [
        ImageDescriptors(
            image_id=f"{class_label}-{split}-{i:03d}",
            descriptors=rng.normal(
                center, spread, size=(descriptors_per_image, center.shape[0])
            ).astype(np.float32),
            class_label=class_label,
        )
        for i in range(count)
    ]


def write_manifest_tree(tmp_path, images_by_split, classes, dimensionality):
    """Write descriptor files and return the in-memory manifest for them."""
    desc_dir = tmp_path / "descriptors"
    desc_dir.mkdir(exist_ok=True)
    entries = []
    for split, images in images_by_split.items():
        for img in images:
            path = desc_dir / f"{img.image_id}.fbds"
            write_descriptor_file(img, path)
            entries.append(
                ManifestImage(
                    image_id=img.image_id,
                    class_label=img.class_label,
                    path=str(path),
                    split=split,
                )
            )
    return DatasetManifest(
        classes=tuple(classes), dimensionality=dimensionality, images=tuple(entries)
    )


@pytest.fixture(scope="session")
def separable_dataset(tmp_path_factory):
    """On-disk 3-class separable fixture: 30/10 train/test, 20 descriptors, N=16."""
    root = tmp_path_factory.mktemp("separable")
    manifest_path = write_dataset(separable_spec(seed=20240811), root)
    return manifest_path


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Small fast fixture for CLI and evaluation tests."""
    root = tmp_path_factory.mktemp("tiny")
    spec = SyntheticSpec(
        train_per_class=8, test_per_class=3, descriptors_per_image=10,
        dimensionality=8, seed=99,
    )
    return write_dataset(spec, root)
