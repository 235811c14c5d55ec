"""Binary checkpoint format.

Layout (all integers little-endian)::

    magic            8 bytes  b"NUMCORE\\0"
    version          uint32
    seed             int64
    registry length  uint32, then that many bytes of UTF-8 JSON
    tensor count     uint32
    per tensor:      uint32 name length, UTF-8 name, uint32 rank,
                     rank x uint64 dims, float64 payload (row-major)
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"NUMCORE\0"
VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(tensors, seed=0, registry=None):
    out = [MAGIC, struct.pack("<I", VERSION), struct.pack("<q", int(seed))]
    reg = json.dumps(registry or {}, sort_keys=True).encode("utf-8")
    out += [struct.pack("<I", len(reg)), reg, struct.pack("<I", len(tensors))]
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        out += [struct.pack("<I", len(raw)), raw, struct.pack("<I", arr.ndim)]
        out += [struct.pack(f"<{arr.ndim}Q", *arr.shape), arr.tobytes()]
    return b"".join(out)


def loads(blob):
    """Return ``(seed, registry, tensors)`` parsed from checkpoint bytes."""
    view = memoryview(blob)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(view):
            raise CheckpointError("truncated checkpoint")
        chunk = view[pos:pos + n]
        pos += n
        return chunk

    if bytes(take(8)) != MAGIC:
        raise CheckpointError("not a numcore checkpoint (bad magic)")
    (version,) = struct.unpack("<I", take(4))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (seed,) = struct.unpack("<q", take(8))
    (reg_len,) = struct.unpack("<I", take(4))
    registry = json.loads(bytes(take(reg_len)).decode("utf-8"))
    (count,) = struct.unpack("<I", take(4))
    tensors = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        name = bytes(take(name_len)).decode("utf-8")
        (rank,) = struct.unpack("<I", take(4))
        dims = struct.unpack(f"<{rank}Q", take(8 * rank))
        n = int(np.prod(dims, dtype=np.int64))
        tensors[name] = np.frombuffer(bytes(take(8 * n)), dtype="<f8").reshape(dims).astype(np.float64)
    if pos != len(view):
        raise CheckpointError("trailing bytes after last tensor")
    return seed, registry, tensors


def save(path, params, registry=None):
    with open(path, "wb") as fh:
        fh.write(dumps(params.state(), seed=params.seed, registry=registry))


def load(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
