"""Flat binary serialization for float arrays.

Layout, all little-endian:

    magic  4 bytes  "NDAR"
    version u32     currently 1
    dtype  u8       0 = float32, 1 = float64
    ndim   u32
    dims   u32 * ndim
    data   raw values, C order

The same block format is embedded inside corpus and checkpoint files,
so the reader reports the absolute offset of whatever it finds wrong.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

MAGIC = b"NDAR"
VERSION = 1

_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


class FormatError(ValueError):
    """Malformed binary input; `offset` is where the trouble starts."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    start = f.tell()
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated while reading {what}: wanted {n} bytes, got {len(buf)}", start)
    return buf


def write_ndar(f: BinaryIO, arr: np.ndarray) -> None:
    arr = np.asarray(arr)
    if arr.dtype not in _DTYPE_CODES:
        raise TypeError(f"only float32/float64 arrays are serializable, got {arr.dtype}")
    f.write(MAGIC)
    f.write(struct.pack("<IBI", VERSION, _DTYPE_CODES[arr.dtype], arr.ndim))
    f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    f.write(np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<")).tobytes())


def read_ndar(f: BinaryIO) -> np.ndarray:
    start = f.tell()
    magic = _read_exact(f, 4, "array magic")
    if magic != MAGIC:
        raise FormatError(f"bad array magic {magic!r}, expected {MAGIC!r}", start)
    version, code, ndim = struct.unpack("<IBI", _read_exact(f, 9, "array header"))
    if version != VERSION:
        raise FormatError(f"unsupported array version {version}, reader supports {VERSION}", start + 4)
    if code not in _CODE_DTYPES:
        raise FormatError(f"unknown dtype code {code}", start + 8)
    dims = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim, "array dims"))
    dtype = _CODE_DTYPES[code]
    count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
    raw = _read_exact(f, count * dtype.itemsize, "array data")
    arr = np.frombuffer(raw, dtype=dtype).reshape(dims)
    return arr.astype(arr.dtype.newbyteorder("="))


def save_array(path, arr: np.ndarray) -> None:
    with open(path, "wb") as f:
        write_ndar(f, arr)


def load_array(path) -> np.ndarray:
    with open(path, "rb") as f:
        return read_ndar(f)
