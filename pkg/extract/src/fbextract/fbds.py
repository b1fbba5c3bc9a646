"""Writer/reader for the FBDS binary descriptor format.

Wire format (little-endian): magic ``FBDS``, u8 version=1, u32 N,
u32 record count, then count x N float32 values. This is the interchange
format the fuzzyboost classifier consumes; see its docs/formats.md.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"FBDS"
VERSION = 1
_HEADER = struct.Struct("<4sBII")


class DescriptorFileError(ValueError):
    pass


def write_fbds(descriptors: np.ndarray, path: str | Path) -> None:
    arr = np.ascontiguousarray(descriptors, dtype="<f4")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DescriptorFileError(f"descriptor array must be non-empty 2-D, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise DescriptorFileError("descriptor array contains non-finite values")
    header = _HEADER.pack(MAGIC, VERSION, arr.shape[1], arr.shape[0])
    Path(path).write_bytes(header + arr.tobytes())


def read_fbds(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DescriptorFileError(f"{path}: truncated header")
    magic, version, n, count = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise DescriptorFileError(f"{path}: not an FBDS v{VERSION} file")
    payload = raw[_HEADER.size:]
    if len(payload) != 4 * n * count:
        raise DescriptorFileError(f"{path}: payload size mismatch")
    return np.frombuffer(payload, dtype="<f4").reshape(count, n)


def read_fbds_header(path: str | Path) -> tuple[int, int]:
    """(dimensionality, record count) without loading the payload."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise DescriptorFileError(f"{path}: truncated header")
    magic, version, n, count = _HEADER.unpack(raw)
    if magic != MAGIC or version != VERSION:
        raise DescriptorFileError(f"{path}: not an FBDS v{VERSION} file")
    return n, count
