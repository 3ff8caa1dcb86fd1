"""Flat binary container for named float/int arrays plus JSON metadata.

Layout (all integers little-endian)::

    8 bytes   magic  b"EEGARM\\x00\\x01"
    4 bytes   header length H (uint32)
    H bytes   UTF-8 JSON header, keys sorted:
              {"meta": {...}, "arrays": [{"name", "dtype", "shape", "offset", "nbytes"}, ...]}
    ...       raw C-order array bytes; offsets are relative to the end of the header

Writing is deterministic: the same arrays and metadata give the same bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"EEGARM\x00\x01"


class ContainerError(ValueError):
    pass


def _le(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, order="C")
    if a.dtype.kind not in "fiub":
        raise ContainerError(f"unsupported dtype {a.dtype}")
    return a.astype(a.dtype.newbyteorder("<"), copy=False)


def dumps(meta: Mapping, arrays: Mapping[str, np.ndarray]) -> bytes:
    entries, blobs, offset = [], [], 0
    for name, arr in arrays.items():
        a = _le(np.asarray(arr))
        raw = a.tobytes(order="C")
        entries.append({"name": name, "dtype": a.dtype.str, "shape": list(a.shape),
                        "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"meta": meta, "arrays": entries}, sort_keys=True,
                        separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<I", len(header)) + header + b"".join(blobs)


def loads(data: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if data[:8] != MAGIC:
        raise ContainerError("not an eegarm container (bad magic)")
    (hlen,) = struct.unpack("<I", data[8:12])
    try:
        header = json.loads(data[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"corrupt header: {exc}") from None
    body = memoryview(data)[12 + hlen:]
    arrays = {}
    for e in header["arrays"]:
        end = e["offset"] + e["nbytes"]
        if end > len(body):
            raise ContainerError(f"array {e['name']} truncated")
        arrays[e["name"]] = np.frombuffer(body[e["offset"]:end], dtype=np.dtype(e["dtype"])) \
            .reshape(e["shape"]).copy()
    return header["meta"], arrays


def write(path: str | Path, meta: Mapping, arrays: Mapping[str, np.ndarray]) -> None:
    Path(path).write_bytes(dumps(meta, arrays))


def read(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    return loads(Path(path).read_bytes())
