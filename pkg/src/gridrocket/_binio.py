"""Shared conventions for the little-endian binary container formats.

Every on-disk artifact produced by this package starts with a 4-byte magic
tag followed by a ``<u32`` format version, then format-specific fixed
fields and raw columnar arrays.  All multi-byte values are little-endian.
"""

import struct

import numpy as np


class FormatError(ValueError):
    """Raised when a binary file does not match the expected format."""


def write_header(f, magic: bytes, version: int) -> None:
    if len(magic) != 4:
        raise ValueError("magic must be exactly 4 bytes")
    f.write(magic + struct.pack("<I", version))


def read_header(f, magic: bytes, max_version: int) -> int:
    head = f.read(8)
    if len(head) != 8 or head[:4] != magic:
        raise FormatError(f"bad magic, expected {magic!r}")
    (version,) = struct.unpack("<I", head[4:])
    if not 1 <= version <= max_version:
        raise FormatError(f"unsupported format version {version}")
    return version


def write_values(f, fmt: str, *values) -> None:
    f.write(struct.pack("<" + fmt, *values))


def read_values(f, fmt: str) -> tuple:
    size = struct.calcsize("<" + fmt)
    raw = f.read(size)
    if len(raw) != size:
        raise FormatError("truncated file")
    return struct.unpack("<" + fmt, raw)


def write_array(f, arr: np.ndarray) -> None:
    f.write(np.ascontiguousarray(arr).astype(arr.dtype.newbyteorder("<")).tobytes())


def read_array(f, dtype, count: int) -> np.ndarray:
    dt = np.dtype(dtype).newbyteorder("<")
    raw = f.read(dt.itemsize * count)
    if len(raw) != dt.itemsize * count:
        raise FormatError("truncated array data")
    return np.frombuffer(raw, dtype=dt).astype(dtype)


def write_str(f, text: str) -> None:
    raw = text.encode("utf-8")
    f.write(struct.pack("<I", len(raw)) + raw)


def read_str(f) -> str:
    (n,) = read_values(f, "I")
    raw = f.read(n)
    if len(raw) != n:
        raise FormatError("truncated string")
    return raw.decode("utf-8")
