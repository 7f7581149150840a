"""Binary parameter checkpoints.

Layout (all integers little-endian)::

    magic        8 bytes   b"RELGRID\\x01"
    meta_len     u32       length of the metadata block
    meta         utf-8     "key = value" lines
    count        u32       number of tensors
    per tensor:
      name_len   u16
      name       utf-8
      dtype      u8        1 = float32, 2 = float64
      ndim       u8
      dims       ndim x u32
      data       raw little-endian values, C order
"""
from __future__ import annotations

import struct
from collections import OrderedDict
from pathlib import Path

import numpy as np

MAGIC = b"RELGRID\x01"
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_CODES = {np.dtype("float32"): 1, np.dtype("float64"): 2}


class CheckpointError(ValueError):
    pass


def format_meta(meta: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in meta.items())


def parse_meta(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def dumps(params: dict, meta: dict | None = None) -> bytes:
    meta_bytes = format_meta(meta or {}).encode()
    parts = [MAGIC, struct.pack("<I", len(meta_bytes)), meta_bytes, struct.pack("<I", len(params))]
    for name, arr in params.items():
        arr = np.asarray(arr)
        if arr.dtype not in _CODES:
            raise CheckpointError(f"unsupported dtype {arr.dtype} for {name}")
        raw = name.encode()
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<BB", _CODES[arr.dtype], arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype=_DTYPES[_CODES[arr.dtype]]).tobytes())
    return b"".join(parts)


def loads(blob: bytes) -> tuple["OrderedDict[str, np.ndarray]", dict]:
    if blob[:8] != MAGIC:
        raise CheckpointError("not a relgrid checkpoint (bad magic)")
    pos = 8

    def take(n):
        nonlocal pos
        if pos + n > len(blob):
            raise CheckpointError("truncated checkpoint")
        chunk = blob[pos:pos + n]
        pos += n
        return chunk

    (meta_len,) = struct.unpack("<I", take(4))
    meta = parse_meta(take(meta_len).decode())
    (count,) = struct.unpack("<I", take(4))
    params = OrderedDict()
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode()
        code, ndim = struct.unpack("<BB", take(2))
        if code not in _DTYPES:
            raise CheckpointError(f"unknown dtype code {code}")
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        dtype = _DTYPES[code]
        n = int(np.prod(shape)) if ndim else 1
        params[name] = np.frombuffer(take(n * dtype.itemsize), dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))
    if pos != len(blob):
        raise CheckpointError("trailing bytes after checkpoint")
    return params, meta


def save(path, params: dict, meta: dict | None = None) -> None:
    Path(path).write_bytes(dumps(params, meta))


def load(path) -> tuple["OrderedDict[str, np.ndarray]", dict]:
    return loads(Path(path).read_bytes())


def load_into(module, params: dict) -> None:
    """Load arrays into a module, refusing any difference in the shape table."""
    expected = [(k, p.shape) for k, p in module.named_parameters()]
    found = [(k, tuple(v.shape)) for k, v in params.items()]
    if expected != found:
        raise CheckpointError("checkpoint shape table does not match the network")
    module.load_arrays(params)
