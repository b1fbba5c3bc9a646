"""SIFT descriptor extraction: images in, FBDS files out.

Input layout is one subfolder per class; output mirrors it. Undecodable or
featureless images are skipped with a warning and listed in the job summary
so the manifest step never references them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .fbds import write_fbds

logger = logging.getLogger("fbextract")

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".tif", ".tiff", ".webp"}

_DETECTORS = {"sift"}


class ExtractionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExtractionJob:
    input_dir: Path
    output_dir: Path
    detector: str = "sift"
    max_keypoints: int = 0  # 0 = unlimited

    def __post_init__(self) -> None:
        if not Path(self.input_dir).is_dir():
            raise ExtractionError(f"input directory {self.input_dir} does not exist")
        if self.detector not in _DETECTORS:
            raise ExtractionError(
                f"unsupported detector {self.detector!r}; available: {sorted(_DETECTORS)}"
            )
        if self.max_keypoints < 0:
            raise ExtractionError("max_keypoints must be >= 0")


@dataclass
class JobSummary:
    written: list[Path] = field(default_factory=list)
    skipped: list[tuple[Path, str]] = field(default_factory=list)


def _make_detector(detector: str, max_keypoints: int):
    return cv2.SIFT_create(nfeatures=max_keypoints)


def extract_image(
    image_path: str | Path,
    out_path: str | Path,
    detector: str = "sift",
    max_keypoints: int = 0,
) -> int:
    """Write one image's descriptors as an FBDS file; returns the keypoint count.

    Raw detector output is written unmodified (no extra normalization).
    Raises ExtractionError when the image cannot be decoded or yields no
    keypoints (e.g. uniform images).
    """
    image = cv2.imread(str(image_path), cv2.IMREAD_GRAYSCALE)
    if image is None:
        raise ExtractionError(f"{image_path}: cannot decode image")
    _, descriptors = _make_detector(detector, max_keypoints).detectAndCompute(image, None)
    if descriptors is None or len(descriptors) == 0:
        raise ExtractionError(f"{image_path}: no keypoints detected")
    write_fbds(np.asarray(descriptors, dtype=np.float32), out_path)
    return len(descriptors)


def run_job(job: ExtractionJob) -> JobSummary:
    """Extract every image under the class-per-subfolder input tree."""
    summary = JobSummary()
    input_dir = Path(job.input_dir)
    class_dirs = sorted(p for p in input_dir.iterdir() if p.is_dir())
    if not class_dirs:
        raise ExtractionError(f"{input_dir}: no class subfolders")
    for class_dir in class_dirs:
        out_class = Path(job.output_dir) / class_dir.name
        out_class.mkdir(parents=True, exist_ok=True)
        images = sorted(
            p for p in class_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
        )
        for image_path in images:
            out_path = out_class / (image_path.stem + ".fbds")
            try:
                count = extract_image(image_path, out_path, job.detector, job.max_keypoints)
            except ExtractionError as exc:
                logger.warning("skipping %s: %s", image_path, exc)
                summary.skipped.append((image_path, str(exc)))
                continue
            logger.info("%s: %d descriptors", image_path, count)
            summary.written.append(out_path)
    return summary
