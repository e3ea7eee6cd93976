"""Generation backends: latent -> video and back.

The "toy" backend is a deterministic, invertible stand-in for a diffusion
pipeline: each latent element is stored as a 16-bit fixed-point value split
across two pixel bytes, and the remaining pixels carry a prompt-derived
texture so the output still looks like a (noisy) clip. It exists so the full
generate -> attack -> invert -> extract loop can run and be tested on a
machine without GPU model weights; a real diffusion backend can be dropped in
behind the same job types.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import skdl, video_io
from .errors import ModelLoadError, ShapeMismatch, ValidationError

# fixed-point grid: latents live in [-8, 8) with step 1/4096
_OFFSET = 8.0
_STEP = 1.0 / 4096.0


@dataclass
class GenerationJob:
    prompt: str
    latent_path: str
    out_path: str
    steps: int = 25
    guidance: float = 8.0
    sampler: str = "toy"
    scale: int = 8  # video edge length per latent cell

    def __post_init__(self):
        if self.steps < 1:
            raise ValidationError("steps must be >= 1")
        if self.scale < 1:
            raise ValidationError("scale must be >= 1")


@dataclass
class InversionJob:
    video_path: str
    out_path: str
    steps: int = 25
    channels: int = 4  # latent channel count of the model
    scale: int = 8     # video pixels per latent cell edge

    def __post_init__(self):
        if self.steps < 1:
            raise ValidationError("steps must be >= 1")
        if self.channels < 1 or self.scale < 1:
            raise ValidationError("channels and scale must be >= 1")


def _background(prompt: str, shape: tuple[int, ...]) -> np.ndarray:
    digest = hashlib.sha256(prompt.encode("utf-8")).digest()
    rng = np.random.default_rng(np.frombuffer(digest, dtype=np.uint64))
    return rng.integers(0, 256, size=shape, dtype=np.uint8)


def _quantize(latent: np.ndarray) -> np.ndarray:
    q = np.round((np.clip(latent, -_OFFSET, _OFFSET - _STEP) + _OFFSET) / _STEP)
    return q.astype(np.uint16)


def _dequantize(q: np.ndarray) -> np.ndarray:
    return (q.astype(np.float32) * _STEP - _OFFSET).astype(np.float32)


def generate(job: GenerationJob) -> str:
    """Render a video that losslessly carries the (quantized) input latent."""
    if job.sampler != "toy":
        raise ModelLoadError(f"backend {job.sampler!r} unavailable: no local model weights")
    latent = skdl.read_latent(job.latent_path)
    f, c, h, w = latent.shape
    H, W = h * job.scale, w * job.scale
    capacity = H * W * 3
    payload_len = 2 * c * h * w
    if payload_len > capacity:
        raise ShapeMismatch(f"latent frame ({c}x{h}x{w}) does not fit a {H}x{W} video frame")

    q = _quantize(latent)
    frames = np.empty((f, H, W, 3), dtype=np.uint8)
    for t in range(f):
        flat = _background(f"{job.prompt}/{t}", (capacity,))
        payload = np.empty(payload_len, dtype=np.uint8)
        payload[0::2] = q[t].ravel() >> 8
        payload[1::2] = q[t].ravel() & 0xFF
        flat[:payload_len] = payload
        frames[t] = flat.reshape(H, W, 3)
    video_io.write_video(job.out_path, frames)
    return job.out_path


def invert(job: InversionJob) -> str:
    """Recover the latent carried by a toy-backend video.

    As in a real pipeline, the latent shape is implied by the video resolution
    and the model configuration: (channels, H/scale, W/scale) per frame.
    """
    frames = video_io.read_video(job.video_path)
    f, H, W, _ = frames.shape
    if H % job.scale or W % job.scale:
        raise ShapeMismatch(f"{job.video_path}: {H}x{W} not divisible by scale {job.scale}")
    c, h, w = job.channels, H // job.scale, W // job.scale
    payload_len = 2 * c * h * w
    if payload_len > H * W * 3:
        raise ShapeMismatch(f"{job.video_path}: implied latent {c}x{h}x{w} exceeds frame capacity")

    latent = np.empty((f, c, h, w), dtype=np.float32)
    for t in range(f):
        flat = frames[t].reshape(-1)[:payload_len]
        q = (flat[0::2].astype(np.uint16) << 8) | flat[1::2].astype(np.uint16)
        latent[t] = _dequantize(q).reshape(c, h, w)
    skdl.write_latent(job.out_path, latent)
    return job.out_path
