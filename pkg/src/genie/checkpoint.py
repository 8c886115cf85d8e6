"""Checkpoint files: one JSON header line, then a little-endian f32 blob.

The header carries the format version, the model config, a parameter
manifest (name, shape, byte offset into the blob) and a sha256 checksum
of the blob, so a loader can verify integrity before trusting weights.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .model import GenieModel, ModelConfig
from .nn import parameter

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Unreadable, mismatched, or corrupted checkpoint file."""


def save_checkpoint(model: GenieModel, path: str | Path) -> str:
    """Write the model; returns the blob checksum (doubles as checkpoint id)."""
    names = sorted(model.params)
    blobs = []
    manifest = []
    offset = 0
    for name in names:
        arr = np.ascontiguousarray(model.params[name].data, dtype="<f4")
        raw = arr.tobytes()
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(raw)
        offset += len(raw)
    blob = b"".join(blobs)
    checksum = hashlib.sha256(blob).hexdigest()
    header = {
        "format_version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "params": manifest,
        "blob_bytes": len(blob),
        "checksum": checksum,
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header).encode("utf-8"))
        f.write(b"\n")
        f.write(blob)
    return checksum


def load_checkpoint(path: str | Path) -> GenieModel:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise CheckpointError(f"{path}: no header line")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: bad header: {e}") from e
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {header.get('format_version')}")
    blob = raw[nl + 1:]
    if len(blob) != header["blob_bytes"]:
        raise CheckpointError(f"{path}: blob is {len(blob)} bytes, header says {header['blob_bytes']}")
    if hashlib.sha256(blob).hexdigest() != header["checksum"]:
        raise CheckpointError(f"{path}: checksum mismatch, file is corrupted")
    config = ModelConfig.from_dict(header["config"])
    params = {}
    entries = header["params"]
    for i, entry in enumerate(entries):
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=entry["offset"])
        params[entry["name"]] = parameter(arr.reshape(shape).copy())
    return GenieModel(config, params=params)


def checkpoint_id(path: str | Path) -> str:
    """Short content id (checksum prefix) without loading the weights."""
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode("utf-8"))
    return header["checksum"][:12]
