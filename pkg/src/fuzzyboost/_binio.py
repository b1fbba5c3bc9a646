"""Small helpers for the checksummed binary file formats.

Layout shared by model files: magic (4 bytes), u8 version, payload,
sha256(everything before) as the last 32 bytes. All integers little-endian.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .errors import ModelCorruptError, ModelFormatError, ModelVersionError

_CHECKSUM_LEN = 32


def write_checksummed(path: str | Path, magic: bytes, version: int, payload: bytes) -> None:
    body = magic + struct.pack("<B", version) + payload
    Path(path).write_bytes(body + hashlib.sha256(body).digest())


def read_checksummed(path: str | Path, magic: bytes, version: int) -> bytes:
    """Verify magic, version and checksum; return the payload bytes."""
    raw = Path(path).read_bytes()
    if len(raw) < len(magic) + 1 + _CHECKSUM_LEN:
        raise ModelCorruptError(f"{path}: file too short ({len(raw)} bytes)")
    if raw[: len(magic)] != magic:
        raise ModelFormatError(f"{path}: bad magic, not a {magic.decode()} file")
    got_version = raw[len(magic)]
    if got_version != version:
        raise ModelVersionError(
            f"{path}: unsupported format version {got_version} (expected {version})"
        )
    body, checksum = raw[:-_CHECKSUM_LEN], raw[-_CHECKSUM_LEN:]
    if hashlib.sha256(body).digest() != checksum:
        raise ModelCorruptError(f"{path}: checksum mismatch (corrupt or truncated)")
    return body[len(magic) + 1 :]


class Cursor:
    """Sequential reader over a payload with bounds checking."""

    def __init__(self, data: bytes, context: str):
        self.data = data
        self.pos = 0
        self.context = context

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise ModelCorruptError(f"{self.context}: payload ended early")
        out = self.data[self.pos : self.pos + count]
        self.pos += count
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def i64(self) -> int:
        return struct.unpack("<q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def f64_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").copy()

    def string(self) -> str:
        return self.take(self.u16()).decode("utf-8")

    def done(self) -> None:
        if self.pos != len(self.data):
            raise ModelCorruptError(f"{self.context}: {len(self.data) - self.pos} trailing bytes")


def pack_string(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ModelFormatError(f"string too long to serialize ({len(raw)} bytes)")
    return struct.pack("<H", len(raw)) + raw
