"""Image-to-descriptor extraction for the fuzzyboost pipeline."""

from .extraction import ExtractionError, ExtractionJob, extract_image, run_job
from .fbds import read_fbds, read_fbds_header, write_fbds
from .manifest import ManifestError, build_manifest

__version__ = "0.1.0"

__all__ = [
    "ExtractionError",
    "ExtractionJob",
    "ManifestError",
    "build_manifest",
    "extract_image",
    "read_fbds",
    "read_fbds_header",
    "run_job",
    "write_fbds",
]
