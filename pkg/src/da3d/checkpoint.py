"""Binary checkpoint format for collections of named MLPs.

Layout (all integers little-endian)::

    b"DA3D"  u16 version  u32 network_count
    per network:
        u32 name_len, name (UTF-8), u32 layer_count
        per layer:
            u32 in_dim, u32 out_dim, u8 activation, f64 dropout,
            in_dim*out_dim f64 weights (row-major), out_dim f64 biases
    u32 meta_len, meta (UTF-8 JSON)

Adam state is not stored.
"""
from __future__ import annotations

import json
import struct
from typing import Mapping

import numpy as np

from .errors import BadMagicError, TruncatedCheckpointError, VersionMismatchError
from .nn import Layer, Mlp

MAGIC = b"DA3D"
VERSION = 1

_ACT_TAGS = {"linear": 0, "selu": 1, "sigmoid": 2}
_TAG_ACTS = {v: k for k, v in _ACT_TAGS.items()}


def encode_networks(networks: Mapping[str, Mlp], meta: dict | None = None) -> bytes:
    out = [MAGIC, struct.pack("<HI", VERSION, len(networks))]
    for name, mlp in networks.items():
        raw = name.encode("utf-8")
        out.append(struct.pack("<I", len(raw)))
        out.append(raw)
        out.append(struct.pack("<I", len(mlp.layers)))
        for layer in mlp.layers:
            out.append(
                struct.pack("<IIBd", layer.in_dim, layer.out_dim, _ACT_TAGS[layer.activation], layer.dropout)
            )
            out.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
            out.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    blob = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    out.append(struct.pack("<I", len(blob)))
    out.append(blob)
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedCheckpointError(
                f"checkpoint truncated: needed {n} bytes at offset {self.pos}, "
                f"only {len(self.data) - self.pos} left"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_networks(data: bytes) -> tuple[dict, dict]:
    """Inverse of :func:`encode_networks`; returns ``(networks, meta)``."""
    if data[:4] != MAGIC:
        raise BadMagicError("not a DA3D checkpoint (bad magic bytes)")
    r = _Reader(data)
    r.take(4)
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise VersionMismatchError(f"checkpoint version {version} unsupported (expected {VERSION})")
    (count,) = r.unpack("<I")
    networks = {}
    for _ in range(count):
        (name_len,) = r.unpack("<I")
        name = r.take(name_len).decode("utf-8")
        (n_layers,) = r.unpack("<I")
        layers = []
        for _ in range(n_layers):
            in_dim, out_dim, tag, dropout = r.unpack("<IIBd")
            if tag not in _TAG_ACTS:
                raise TruncatedCheckpointError(f"corrupt activation tag {tag} in network {name!r}")
            w = np.frombuffer(r.take(8 * in_dim * out_dim), dtype="<f8").reshape(in_dim, out_dim)
            b = np.frombuffer(r.take(8 * out_dim), dtype="<f8")
            layers.append(
                Layer(weights=w.astype(np.float64), bias=b.astype(np.float64),
                      activation=_TAG_ACTS[tag], dropout=dropout)
            )
        networks[name] = Mlp(layers)
    (meta_len,) = r.unpack("<I")
    meta = json.loads(r.take(meta_len).decode("utf-8"))
    return networks, meta
