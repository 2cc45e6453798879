"""Model checkpoint files.

Layout, little-endian:

    magic    4 bytes "SSVC"
    version  u32, currently 1
    config   u32 length + UTF-8 JSON (the ModelConfig)
    meta     u32 length + UTF-8 JSON (step count, seeds, anything else)
    count    u32 number of named arrays
    then per array: name length u16 + UTF-8 name, NDAR block

Arrays round-trip bit-exactly; training resume depends on it.
"""

from __future__ import annotations

import json
import struct
from typing import BinaryIO

import numpy as np

from ..autodiff.ndar import FormatError, read_ndar, write_ndar
from .config import ModelConfig

MAGIC = b"SSVC"
VERSION = 1


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    start = f.tell()
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated while reading {what}", start)
    return buf


def _write_json(f: BinaryIO, obj) -> None:
    blob = json.dumps(obj).encode("utf-8")
    f.write(struct.pack("<I", len(blob)))
    f.write(blob)


def _read_json(f: BinaryIO, what: str):
    (n,) = struct.unpack("<I", _read_exact(f, 4, f"{what} length"))
    return json.loads(_read_exact(f, n, what).decode("utf-8"))


def save_checkpoint(path, cfg: ModelConfig, arrays: dict[str, np.ndarray],
                    meta: dict | None = None) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        _write_json(f, cfg.to_json_dict())
        _write_json(f, meta or {})
        f.write(struct.pack("<I", len(arrays)))
        for name, value in arrays.items():
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            write_ndar(f, np.asarray(value))


def load_checkpoint(path) -> tuple[ModelConfig, dict, dict[str, np.ndarray]]:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "checkpoint magic")
        if magic != MAGIC:
            raise FormatError(f"bad checkpoint magic {magic!r}, expected {MAGIC!r}", 0)
        (version,) = struct.unpack("<I", _read_exact(f, 4, "checkpoint version"))
        if version != VERSION:
            raise FormatError(
                f"unsupported checkpoint version {version}, reader supports {VERSION}", 4
            )
        cfg = ModelConfig.from_json_dict(_read_json(f, "model config"))
        meta = _read_json(f, "checkpoint meta")
        (count,) = struct.unpack("<I", _read_exact(f, 4, "array count"))
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(f, 2, "array name length"))
            name = _read_exact(f, name_len, "array name").decode("utf-8")
            arrays[name] = read_ndar(f)
    return cfg, meta, arrays


def load_model(path):
    """Load a checkpoint into a freshly built store of the matching kind.

    Returns (cfg, params, meta).  The store is built in the dtype the
    arrays were saved with; optimizer buffers present in training
    checkpoints are ignored here, so the result is ready for inference.
    """
    from ..autodiff import Rng, default_dtype
    from .init import build_classifier_params, build_params

    cfg, meta, arrays = load_checkpoint(path)
    first = next((k for k in arrays if k.startswith("param.")), None)
    if first is None:
        raise FormatError("checkpoint holds no parameters", 0)
    builder = build_classifier_params if meta.get("kind") == "classifier" else build_params
    with default_dtype(arrays[first].dtype.name):
        params = builder(cfg, Rng(0))
    params.load_state_arrays(arrays)
    return cfg, params, meta
