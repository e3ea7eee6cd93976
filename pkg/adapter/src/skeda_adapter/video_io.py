"""Simple uncompressed video container used by the toy backend.

Videos are stored as a single .npy array of shape (frames, height, width, 3)
with uint8 RGB samples. This keeps the adapter runnable in environments
without system video codecs; the `attack` command can still shell out to
ffmpeg for real H.264 transcodes when one is installed.
"""
from __future__ import annotations

import numpy as np

from .errors import DecodeError


def write_video(path, frames: np.ndarray) -> None:
    frames = np.asarray(frames)
    if frames.ndim != 4 or frames.shape[-1] != 3 or frames.dtype != np.uint8:
        raise DecodeError(f"video must be uint8 (T, H, W, 3), got {frames.dtype} {frames.shape}")
    np.save(path, frames, allow_pickle=False)


def read_video(path) -> np.ndarray:
    try:
        frames = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise DecodeError(f"cannot read video container {path}: {exc}") from exc
    if frames.ndim != 4 or frames.shape[-1] != 3 or frames.dtype != np.uint8:
        raise DecodeError(f"{path}: not a uint8 (T, H, W, 3) video array")
    return frames
