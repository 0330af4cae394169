"""Binary weight blobs.

Layout, all little-endian::

    magic  b"DDWB" | version u32 | meta_len u32 | n_tensors u32
    meta   UTF-8 JSON, meta_len bytes
    shape table, per tensor: name_len u16, name, ndim u8, dims u32 * ndim
    data   float64 values of every tensor, in table order, C order
"""
from __future__ import annotations

import json
import struct

import numpy as np

from ..autodiff.nn import ChannelNorm, Module

MAGIC = b"DDWB"
VERSION = 1


def named_arrays(module: Module, prefix: str = "") -> list[tuple[str, np.ndarray]]:
    """Parameters and running statistics of ``module`` under stable dotted names."""
    out = []
    for k, v in vars(module).items():
        if getattr(v, "requires_grad", False):
            out.append((prefix + k, v.data))
    if isinstance(module, ChannelNorm):
        out += [(prefix + "running_mean", module.running_mean),
                (prefix + "running_var", module.running_var)]
    for i, child in enumerate(module.children()):
        out += named_arrays(child, f"{prefix}{i}.")
    return out


def write_blob(path, arrays, meta: dict | None = None) -> None:
    arrays = [(str(n), np.asarray(a, dtype=np.float64)) for n, a in arrays]
    meta_b = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<III", VERSION, len(meta_b), len(arrays)), meta_b]
    for name, a in arrays:
        nb = name.encode("utf-8")
        parts.append(struct.pack("<H", len(nb)) + nb + struct.pack("<B", a.ndim))
        parts.append(struct.pack(f"<{a.ndim}I", *a.shape))
    for _, a in arrays:
        parts.append(np.ascontiguousarray(a).astype("<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_blob(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise ValueError("not a weight blob (bad magic)")
    version, meta_len, count = struct.unpack_from("<III", blob, 4)
    if version != VERSION:
        raise ValueError(f"unsupported weight blob version {version}")
    pos = 16
    meta = json.loads(blob[pos:pos + meta_len].decode("utf-8"))
    pos += meta_len
    table = []
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", blob, pos)
        name = blob[pos + 2:pos + 2 + nlen].decode("utf-8")
        pos += 2 + nlen
        (ndim,) = struct.unpack_from("<B", blob, pos)
        shape = struct.unpack_from(f"<{ndim}I", blob, pos + 1)
        pos += 1 + 4 * ndim
        table.append((name, shape))
    arrays = {}
    for name, shape in table:
        n = int(np.prod(shape, dtype=np.int64))
        if pos + 8 * n > len(blob):
            raise ValueError("weight blob truncated")
        arrays[name] = np.frombuffer(blob, "<f8", n, pos).reshape(shape).astype(np.float64)
        pos += 8 * n
    if pos != len(blob):
        raise ValueError("trailing bytes after weight data")
    return meta, arrays


def load_into(module: Module, arrays: dict[str, np.ndarray], prefix: str = "") -> None:
    """Copy ``arrays`` into ``module``'s parameters and buffers in place."""
    for name, target in named_arrays(module, prefix):
        if name not in arrays:
            raise KeyError(f"checkpoint lacks {name}")
        src = arrays[name]
        if src.shape != target.shape:
            raise ValueError(f"{name}: shape {src.shape} vs {target.shape}")
        target[...] = src
