"""Parameter payload: a one-line JSON manifest followed by a float64 blob.

Layout::

    BEER-PAYLOAD\\n
    {"version": 1, "entries": [{"name", "shape", "offset"}...],
     "blob_bytes": N, "sha256": "...", "meta": {...}}\\n
    <N bytes: little-endian float64, entries concatenated in row-major order>

``offset`` is a byte offset into the blob. ``meta`` carries arbitrary
JSON-serialisable state (step counters, RNG states).
"""
from __future__ import annotations

import hashlib
import json
import os
from typing import Any, Mapping

import numpy as np

from beer.errors import ChecksumError, CheckpointError, TruncatedCheckpointError, VersionMismatchError

MAGIC = b"BEER-PAYLOAD\n"
FORMAT_VERSION = 1
_LE_F64 = np.dtype("<f8")


def dumps(arrays: Mapping[str, np.ndarray], meta: Mapping[str, Any] | None = None) -> bytes:
    entries = []
    chunks = []
    offset = 0
    for name, value in arrays.items():
        arr = np.array(value, dtype=_LE_F64, order="C")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        raw = arr.tobytes(order="C")
        chunks.append(raw)
        offset += len(raw)
    blob = b"".join(chunks)
    header = {
        "version": FORMAT_VERSION,
        "entries": entries,
        "blob_bytes": len(blob),
        "sha256": hashlib.sha256(blob).hexdigest(),
        "meta": dict(meta or {}),
    }
    line = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + line + b"\n" + blob


def loads(payload: bytes) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    if not payload.startswith(MAGIC):
        raise CheckpointError("not a parameter payload (bad magic line)")
    rest = payload[len(MAGIC):]
    newline = rest.find(b"\n")
    if newline < 0:
        raise TruncatedCheckpointError("manifest line is incomplete")
    try:
        header = json.loads(rest[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable manifest: {exc}") from exc
    if header.get("version") != FORMAT_VERSION:
        raise VersionMismatchError(
            f"payload version {header.get('version')!r}, this reader supports {FORMAT_VERSION}"
        )
    blob = rest[newline + 1:]
    if len(blob) != header["blob_bytes"]:
        raise TruncatedCheckpointError(
            f"blob holds {len(blob)} bytes, manifest promises {header['blob_bytes']}"
        )
    if hashlib.sha256(blob).hexdigest() != header["sha256"]:
        raise ChecksumError("blob checksum does not match the manifest")
    arrays = {}
    for entry in header["entries"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        stop = start + count * _LE_F64.itemsize
        if stop > len(blob):
            raise TruncatedCheckpointError(f"entry {entry['name']} runs past the blob")
        arrays[entry["name"]] = (
            np.frombuffer(blob[start:stop], dtype=_LE_F64).astype(np.float64).reshape(shape)
        )
    return arrays, header["meta"]


def save(path: str | os.PathLike, arrays: Mapping[str, np.ndarray], meta: Mapping[str, Any] | None = None) -> None:
    payload = dumps(arrays, meta)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def load(path: str | os.PathLike) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    with open(path, "rb") as fh:
        return loads(fh.read())
