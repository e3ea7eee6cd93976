"""The "SKDL" latent tensor container shared with the generation adapter.

Layout: magic b"SKDL", u32 LE version=1, u32 LE ndim=4, four u32 LE dims
(f, c, h, w), then f*c*h*w float32 LE values in row-major order.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import IoError, MalformedLatentFile, VersionMismatch

MAGIC = b"SKDL"
LATENT_FILE_VERSION = 1


def write_latent(path, data: np.ndarray) -> None:
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 4:
        raise MalformedLatentFile(f"latent tensor must be 4-D, got {data.ndim}-D")
    header = MAGIC + struct.pack("<II", LATENT_FILE_VERSION, 4)
    header += struct.pack("<IIII", *data.shape)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(data.astype("<f4").tobytes(order="C"))
    except OSError as exc:
        raise IoError(f"cannot write latent file {path}: {exc}") from exc


def read_latent(path) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read latent file {path}: {exc}") from exc
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise MalformedLatentFile(f"{path}: bad magic or truncated header")
    version, ndim = struct.unpack_from("<II", blob, 4)
    if version != LATENT_FILE_VERSION:
        raise VersionMismatch(f"{path}: latent file version {version} unsupported")
    if ndim != 4:
        raise MalformedLatentFile(f"{path}: expected 4 dims, file declares {ndim}")
    if len(blob) < 12 + 16:
        raise MalformedLatentFile(f"{path}: truncated dims")
    shape = struct.unpack_from("<IIII", blob, 12)
    n = int(np.prod(shape))
    payload = blob[28:]
    if len(payload) != 4 * n:
        raise MalformedLatentFile(f"{path}: payload is {len(payload)} bytes, want {4 * n}")
    return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
