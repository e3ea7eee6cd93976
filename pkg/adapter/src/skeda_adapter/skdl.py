"""Reader/writer for the "SKDL" latent tensor container.

This is the file-level contract with the watermark codec: magic b"SKDL",
u32 LE version=1, u32 LE ndim=4, four u32 LE dims (f, c, h, w), then
f*c*h*w float32 LE values in row-major order. Implemented here from the
format definition so the adapter has no code dependency on the codec.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import DecodeError

MAGIC = b"SKDL"
VERSION = 1


def write_latent(path, data: np.ndarray) -> None:
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 4:
        raise DecodeError(f"latent tensor must be 4-D, got {data.ndim}-D")
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", VERSION, 4))
        fh.write(struct.pack("<IIII", *data.shape))
        fh.write(data.astype("<f4").tobytes(order="C"))


def read_latent(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 28 or blob[:4] != MAGIC:
        raise DecodeError(f"{path}: bad magic or truncated header")
    version, ndim = struct.unpack_from("<II", blob, 4)
    if version != VERSION or ndim != 4:
        raise DecodeError(f"{path}: unsupported version {version} / ndim {ndim}")
    shape = struct.unpack_from("<IIII", blob, 12)
    n = int(np.prod(shape))
    payload = blob[28:]
    if len(payload) != 4 * n:
        raise DecodeError(f"{path}: payload is {len(payload)} bytes, want {4 * n}")
    return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
