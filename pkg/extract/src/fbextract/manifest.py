"""Manifest generation over an extracted descriptor tree.

Produces the ``fuzzyboost-manifest`` v1 JSON schema from a
class-per-subfolder layout of FBDS files, with a seeded stratified
train/test split (15% test by default).
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .fbds import read_fbds_header


class ManifestError(ValueError):
    pass


def build_manifest(
    descriptor_dir: str | Path,
    out_path: str | Path | None = None,
    test_fraction: float = 0.15,
    seed: int = 0,
) -> Path:
    """Scan ``descriptor_dir``'s class subfolders and write a manifest.

    Every class must contribute at least one usable descriptor file; all
    files must agree on dimensionality. Paths are stored relative to the
    manifest so the dataset directory stays relocatable.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ManifestError(f"test fraction must be in (0, 1), got {test_fraction}")
    descriptor_dir = Path(descriptor_dir)
    out_path = Path(out_path) if out_path else descriptor_dir / "manifest.json"
    class_dirs = sorted(p for p in descriptor_dir.iterdir() if p.is_dir())
    if not class_dirs:
        raise ManifestError(f"{descriptor_dir}: no class subfolders")

    dimensionality: int | None = None
    per_class: dict[str, list[Path]] = {}
    for class_dir in class_dirs:
        files = sorted(class_dir.glob("*.fbds"))
        usable = []
        for path in files:
            n, count = read_fbds_header(path)
            if count < 1:
                continue
            if dimensionality is None:
                dimensionality = n
            elif n != dimensionality:
                raise ManifestError(
                    f"{path}: dimensionality {n} disagrees with {dimensionality}"
                )
            usable.append(path)
        if not usable:
            raise ManifestError(f"class {class_dir.name!r} has no usable descriptor files")
        per_class[class_dir.name] = usable

    rng = np.random.default_rng(seed)
    images = []
    for cls, files in per_class.items():
        n = len(files)
        n_test = int(round(test_fraction * n))
        if n >= 2:
            n_test = min(max(n_test, 1), n - 1)
        else:
            n_test = 0
        order = rng.permutation(n)
        test_idx = {int(i) for i in order[:n_test]}
        for i, path in enumerate(files):
            images.append(
                {
                    "id": f"{cls}/{path.stem}",
                    "class": cls,
                    "path": os.path.relpath(path, out_path.parent),
                    "split": "test" if i in test_idx else "train",
                }
            )

    doc = {
        "format": "fuzzyboost-manifest",
        "version": 1,
        "dimensionality": dimensionality,
        "classes": sorted(per_class),
        "images": images,
    }
    out_path.write_text(json.dumps(doc, indent=2) + "\n")
    return out_path
