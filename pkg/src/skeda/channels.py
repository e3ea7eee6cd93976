"""Latent-domain distortion channels with seeded reproducibility.

Each channel models a video/image attack at latent scale: additive noise,
sign flips, frame drop/swap/averaging, a common erased rectangle (crop proxy),
uniform quantization (compression proxy), and a calibrated inversion proxy.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParams, EmptyGrid, MalformedKeyFile
from .keys import Seed

KINDS = ("awgn", "sign_flip", "frame_drop", "frame_swap", "frame_average",
         "spatial_erase", "quantize", "inversion_proxy", "compose")


@dataclass
class ChannelSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: Seed = field(default_factory=lambda: Seed(b"\x00" * 32))
    stages: list["ChannelSpec"] | None = None

    def __post_init__(self):
        _validate(self)

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "params": dict(self.params), "seed_hex": self.seed.hex()}
        if self.kind == "compose":
            doc["stages"] = [s.to_json() for s in self.stages]
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ChannelSpec":
        try:
            kind = doc["kind"]
            params = dict(doc.get("params", {}))
            seed = Seed.from_hex(doc["seed_hex"]) if "seed_hex" in doc else Seed(b"\x00" * 32)
            stages = None
            if kind == "compose":
                stages = [cls.from_json(s) for s in doc["stages"]]
        except (KeyError, TypeError) as exc:
            raise MalformedKeyFile(f"malformed channel spec: {exc}") from exc
        return cls(kind=kind, params=params, seed=seed, stages=stages)


def _need(spec: ChannelSpec, name: str, lo=None, hi=None, integer=False):
    if name not in spec.params:
        raise BadParams(f"channel {spec.kind} requires parameter {name!r}")
    v = spec.params[name]
    if integer:
        if int(v) != v:
            raise BadParams(f"{spec.kind}.{name} must be an integer, got {v}")
        v = int(v)
    else:
        v = float(v)
    if lo is not None and v < lo:
        raise BadParams(f"{spec.kind}.{name} must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise BadParams(f"{spec.kind}.{name} must be <= {hi}, got {v}")
    return v


def _validate(spec: ChannelSpec) -> None:
    if spec.kind not in KINDS:
        raise BadParams(f"unknown channel kind {spec.kind!r}")
    if spec.kind == "compose":
        if not spec.stages:
            raise BadParams("compose requires a nonempty list of stages")
        return
    if spec.stages is not None:
        raise BadParams(f"stages only valid for compose, not {spec.kind}")
    if spec.kind == "awgn":
        _need(spec, "sigma", lo=0.0)
    elif spec.kind in ("sign_flip", "frame_drop", "frame_swap"):
        _need(spec, "p", lo=0.0, hi=1.0)
    elif spec.kind == "frame_average":
        _need(spec, "n", lo=1, integer=True)
    elif spec.kind == "spatial_erase":
        _need(spec, "p", lo=0.0, hi=1.0)
    elif spec.kind == "quantize":
        _need(spec, "levels", lo=2, integer=True)
    elif spec.kind == "inversion_proxy":
        _need(spec, "sigma", lo=0.0)
        _need(spec, "flip_p", lo=0.0, hi=1.0)


def _rng(spec: ChannelSpec, label: bytes = b"") -> np.random.Generator:
    digest = hashlib.sha256(spec.seed.data + b"/chan/" + spec.kind.encode() + b"/" + label).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def apply(spec: ChannelSpec, latents) -> list[np.ndarray]:
    """Apply the channel to a frame list; deterministic given the spec seed."""
    frames = [np.asarray(fr, dtype=np.float32) for fr in latents]
    if len(frames) == 0:
        raise BadParams("channel input must contain at least one frame")
    kind = spec.kind

    if kind == "compose":
        out = frames
        for stage in spec.stages:
            out = apply(stage, out)
        return out

    if kind == "awgn":
        sigma = _need(spec, "sigma", lo=0.0)
        if sigma == 0.0:
            return frames
        rng = _rng(spec)
        return [fr + rng.normal(0.0, sigma, fr.shape).astype(np.float32) for fr in frames]

    if kind == "sign_flip":
        p = _need(spec, "p", lo=0.0, hi=1.0)
        if p == 0.0:
            return frames
        rng = _rng(spec)
        return [np.where(rng.random(fr.shape) < p, -fr, fr) for fr in frames]

    if kind == "frame_drop":
        p = _need(spec, "p", lo=0.0, hi=1.0)
        rng = _rng(spec)
        keep = rng.random(len(frames)) >= p
        if not keep.any():
            keep[int(rng.integers(len(frames)))] = True  # never emit an empty video
        return [fr for fr, k in zip(frames, keep) if k]

    if kind == "frame_swap":
        p = _need(spec, "p", lo=0.0, hi=1.0)
        rng = _rng(spec)
        out = list(frames)
        for t in range(len(out) - 1):
            if rng.random() < p:
                out[t], out[t + 1] = out[t + 1], out[t]
        return out

    if kind == "frame_average":
        n = _need(spec, "n", lo=1, integer=True)
        if n == 1:
            return frames
        left, right = (n - 1) // 2, n // 2
        stack = np.stack(frames)
        out = []
        for t in range(len(frames)):
            window = stack[max(0, t - left):min(len(frames), t + right + 1)]
            out.append(window.mean(axis=0).astype(np.float32))
        return out

    if kind == "spatial_erase":
        p = _need(spec, "p", lo=0.0, hi=1.0)
        rng = _rng(spec)
        c, h, w = frames[0].shape[-3:]
        hk = max(1, int(round(p * h)))
        wk = max(1, int(round(p * w)))
        top = int(rng.integers(0, h - hk + 1))
        lft = int(rng.integers(0, w - wk + 1))
        mask = np.ones((h, w), dtype=bool)
        mask[top:top + hk, lft:lft + wk] = False  # retained region stays exact
        out = []
        for fr in frames:
            noise = rng.normal(0.0, 1.0, fr.shape).astype(np.float32)
            out.append(np.where(mask[None, :, :], noise, fr))
        return out

    if kind == "quantize":
        levels = _need(spec, "levels", lo=2, integer=True)
        clipped = [np.clip(fr, -4.0, 4.0) for fr in frames]
        step = 8.0 / (levels - 1)
        return [(np.round((fr + 4.0) / step) * step - 4.0).astype(np.float32) for fr in clipped]

    if kind == "inversion_proxy":
        sigma = _need(spec, "sigma", lo=0.0)
        flip_p = _need(spec, "flip_p", lo=0.0, hi=1.0)
        noisy = apply(ChannelSpec("awgn", {"sigma": sigma}, spec.seed.child(b"inv-awgn")), frames)
        return apply(ChannelSpec("sign_flip", {"p": flip_p}, spec.seed.child(b"inv-flip")), noisy)

    raise BadParams(f"unknown channel kind {kind!r}")  # unreachable


def sweep(template: ChannelSpec, param_grid: dict, base_seed: Seed | None = None) -> list[ChannelSpec]:
    """One spec per grid point, seeds derived from the base seed and index."""
    if not param_grid or any(len(v) == 0 for v in param_grid.values()):
        raise EmptyGrid("parameter grid must be nonempty")
    if base_seed is None:
        base_seed = template.seed
    names = sorted(param_grid)
    specs = []
    for i, values in enumerate(itertools.product(*(param_grid[n] for n in names))):
        params = dict(template.params)
        params.update(dict(zip(names, values)))
        specs.append(ChannelSpec(kind=template.kind, params=params,
                                 seed=base_seed.child(b"sweep/%d" % i),
                                 stages=template.stages))
    return specs


def save_spec(spec: ChannelSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.to_json(), fh, indent=2)
        fh.write("\n")


def load_spec(path) -> ChannelSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedKeyFile(f"cannot read channel spec {path}: {exc}") from exc
    return ChannelSpec.from_json(doc)
