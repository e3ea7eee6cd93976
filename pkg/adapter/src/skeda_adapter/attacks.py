"""Pixel-domain distortions applied to videos between generation and inversion."""
from __future__ import annotations

import shutil
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from .errors import CodecError, ValidationError

KINDS = ("pixel_noise", "brightness", "blur", "frame_drop", "h264")


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def attack_video(frames: np.ndarray, kind: str, params: dict) -> np.ndarray:
    frames = np.asarray(frames)
    seed = int(params.get("seed", 0))

    if kind == "pixel_noise":
        sigma = float(params.get("sigma", 2.0))
        if sigma < 0:
            raise ValidationError("sigma must be >= 0")
        noise = _rng(seed).normal(0.0, sigma, frames.shape)
        return np.clip(frames.astype(np.float64) + noise, 0, 255).round().astype(np.uint8)

    if kind == "brightness":
        factor = float(params.get("factor", 1.0))
        if factor < 0:
            raise ValidationError("factor must be >= 0")
        return np.clip(frames.astype(np.float64) * factor, 0, 255).round().astype(np.uint8)

    if kind == "blur":
        k = int(params.get("k", 3))
        if k < 1 or k % 2 == 0:
            raise ValidationError("blur kernel k must be odd and >= 1")
        pad = k // 2
        acc = np.zeros(frames.shape, dtype=np.float64)
        padded = np.pad(frames.astype(np.float64), ((0, 0), (pad, pad), (pad, pad), (0, 0)),
                        mode="edge")
        for dy in range(k):
            for dx in range(k):
                acc += padded[:, dy:dy + frames.shape[1], dx:dx + frames.shape[2], :]
        return np.clip(acc / (k * k), 0, 255).round().astype(np.uint8)

    if kind == "frame_drop":
        p = float(params.get("p", 0.25))
        if not 0.0 <= p <= 1.0:
            raise ValidationError("p must be in [0, 1]")
        keep = _rng(seed).random(frames.shape[0]) >= p
        if not keep.any():
            keep[0] = True
        return frames[keep]

    if kind == "h264":
        return _h264_round_trip(frames, int(params.get("crf", 23)))

    raise ValidationError(f"unknown attack kind {kind!r}; choose from {KINDS}")


def _h264_round_trip(frames: np.ndarray, crf: int) -> np.ndarray:
    """Encode to H.264 at the given CRF and decode back, via ffmpeg."""
    if shutil.which("ffmpeg") is None:
        raise CodecError("ffmpeg is not installed; h264 attack unavailable")
    t, h, w, _ = frames.shape
    with tempfile.TemporaryDirectory() as tmp:
        mp4 = Path(tmp) / "clip.mp4"
        enc = ["ffmpeg", "-y", "-loglevel", "error", "-f", "rawvideo", "-pix_fmt", "rgb24",
               "-s", f"{w}x{h}", "-r", "8", "-i", "pipe:0", "-c:v", "libx264",
               "-crf", str(crf), "-pix_fmt", "yuv420p", str(mp4)]
        proc = subprocess.run(enc, input=frames.tobytes(), capture_output=True)
        if proc.returncode != 0:
            raise CodecError(f"ffmpeg encode failed: {proc.stderr.decode(errors='replace')}")
        dec = ["ffmpeg", "-loglevel", "error", "-i", str(mp4), "-f", "rawvideo",
               "-pix_fmt", "rgb24", "pipe:1"]
        proc = subprocess.run(dec, capture_output=True)
        if proc.returncode != 0:
            raise CodecError(f"ffmpeg decode failed: {proc.stderr.decode(errors='replace')}")
        out = np.frombuffer(proc.stdout, dtype=np.uint8)
        if out.size % (h * w * 3) != 0:
            raise CodecError("ffmpeg returned a partial frame")
        return out.reshape(-1, h, w, 3).copy()
