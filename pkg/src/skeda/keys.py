"""Secret-material derivation: seeds, keyed streams, permutations, key files.

All secrets (equalizing bits, shuffle permutations, sampling randomness) come
from one 32-byte seed through a domain-separated AES-256-CTR keystream, so the
embedder and extractor can regenerate identical material from the seed alone.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import IoError, MalformedKeyFile, NonDividingFactors, ValidationError, VersionMismatch

KEY_FILE_VERSION = 1
MODES = ("uniform", "per_frame")

_TWO_NEG_53 = 2.0 ** -53


@dataclass(frozen=True)
class Seed:
    """32-byte opaque secret; the root of every derived key."""

    data: bytes

    def __post_init__(self):
        if not isinstance(self.data, bytes) or len(self.data) != 32:
            raise ValidationError("seed must be exactly 32 bytes")

    @classmethod
    def from_hex(cls, hexstr: str) -> "Seed":
        try:
            raw = bytes.fromhex(hexstr)
        except ValueError as exc:
            raise ValidationError(f"bad seed hex: {exc}") from exc
        return cls(raw)

    @classmethod
    def random(cls) -> "Seed":
        return cls(os.urandom(32))

    def hex(self) -> str:
        return self.data.hex()

    def child(self, label: bytes) -> "Seed":
        """Deterministic sub-seed for a labelled purpose (trials, sweeps)."""
        return Seed(hashlib.sha256(self.data + b"/" + label).digest())


@dataclass(frozen=True)
class LatentDims:
    """Latent carrier shape: frames x channels x height x width."""

    f: int
    c: int
    h: int
    w: int

    def __post_init__(self):
        for name in ("f", "c", "h", "w"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValidationError(f"latent dim {name} must be a positive integer")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.f, self.c, self.h, self.w)

    @property
    def frame_size(self) -> int:
        return self.c * self.h * self.w


DEFAULT_DIMS = LatentDims(16, 4, 64, 64)


@dataclass(frozen=True)
class ReplicationFactors:
    """How many times the message tiles along each latent axis."""

    k_f: int
    f_c: int
    f_h: int
    f_w: int

    def __post_init__(self):
        for name in ("k_f", "f_c", "f_h", "f_w"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValidationError(f"replication factor {name} must be a positive integer")

    @property
    def copies(self) -> int:
        return self.k_f * self.f_c * self.f_h * self.f_w

    def n_bits(self, dims: LatentDims) -> int:
        self.check_divides(dims)
        return (dims.f // self.k_f) * (dims.c // self.f_c) * (dims.h // self.f_h) * (dims.w // self.f_w)

    def base_shape(self, dims: LatentDims) -> tuple[int, int, int, int]:
        self.check_divides(dims)
        return (dims.f // self.k_f, dims.c // self.f_c, dims.h // self.f_h, dims.w // self.f_w)

    def check_divides(self, dims: LatentDims) -> None:
        pairs = ((dims.f, self.k_f, "f/k_f"), (dims.c, self.f_c, "c/f_c"),
                 (dims.h, self.f_h, "h/f_h"), (dims.w, self.f_w, "w/f_w"))
        for dim, fac, label in pairs:
            if dim % fac != 0:
                raise NonDividingFactors(f"{label}: {dim} not divisible by {fac}")


DEFAULT_FACTORS = ReplicationFactors(16, 1, 8, 8)


class KeyStream:
    """Deterministic keyed byte stream (AES-256-CTR), domain-separated by tag.

    The AES key is SHA-256(seed || 0x00 || tag); the counter starts at zero.
    Distinct tags therefore yield computationally independent streams.
    """

    def __init__(self, seed: Seed, tag: bytes):
        if isinstance(tag, str):
            tag = tag.encode()
        key = hashlib.sha256(seed.data + b"\x00" + tag).digest()
        cipher = Cipher(algorithms.AES(key), modes.CTR(b"\x00" * 16))
        self._enc = cipher.encryptor()

    def take_bytes(self, n: int) -> bytes:
        return self._enc.update(b"\x00" * n)

    def bits(self, n: int) -> np.ndarray:
        """n uniform {0,1} values as uint8."""
        raw = np.frombuffer(self.take_bytes((n + 7) // 8), dtype=np.uint8)
        return np.unpackbits(raw)[:n]

    def uint64(self, n: int) -> np.ndarray:
        return np.frombuffer(self.take_bytes(8 * n), dtype="<u8")

    def uniforms(self, n: int) -> np.ndarray:
        """n uniform float64 in the open interval (0, 1), endpoints excluded."""
        u = (self.uint64(n) >> np.uint64(11)).astype(np.float64) * _TWO_NEG_53
        return np.clip(u, _TWO_NEG_53, 1.0 - _TWO_NEG_53)


def prng_stream(seed: Seed, domain_tag: bytes) -> KeyStream:
    """Open the deterministic stream for (seed, tag)."""
    return KeyStream(seed, domain_tag)


def _fisher_yates(n: int, stream: KeyStream) -> np.ndarray:
    """Keyed Fisher-Yates shuffle of 0..n-1 driven by the stream."""
    perm = np.arange(n, dtype=np.int64)
    if n < 2:
        return perm
    draws = stream.uint64(n - 1).tolist()  # python ints: fast modulo in the loop
    p = perm.tolist()
    idx = 0
    for i in range(n - 1, 0, -1):
        j = draws[idx] % (i + 1)
        idx += 1
        p[i], p[j] = p[j], p[i]
    return np.asarray(p, dtype=np.int64)


@dataclass(frozen=True)
class KeySet:
    """All derived secret material for one (seed, dims, factors, mode)."""

    seed: Seed
    dims: LatentDims
    factors: ReplicationFactors
    mode: str
    equalizing_key: np.ndarray = field(repr=False)
    base_perm: np.ndarray = field(repr=False)
    frame_perms: np.ndarray = field(repr=False)  # (f, c*h*w)

    @property
    def n_bits(self) -> int:
        return self.factors.n_bits(self.dims)

    def __eq__(self, other):
        if not isinstance(other, KeySet):
            return NotImplemented
        return (self.seed == other.seed and self.dims == other.dims
                and self.factors == other.factors and self.mode == other.mode
                and np.array_equal(self.equalizing_key, other.equalizing_key)
                and np.array_equal(self.base_perm, other.base_perm)
                and np.array_equal(self.frame_perms, other.frame_perms))


def derive_keys(seed: Seed, dims: LatentDims = DEFAULT_DIMS,
                factors: ReplicationFactors = DEFAULT_FACTORS,
                mode: str = "uniform") -> KeySet:
    """Deterministically derive the full KeySet from the seed.

    The equalizing bits come from the "equalize" stream, the base permutation
    is a Fisher-Yates shuffle driven by the "shuffle" stream, and in per_frame
    mode each frame composes the base permutation with a frame-indexed
    reshuffle keyed by (seed, frame index).
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    n_bits = factors.n_bits(dims)
    eq_key = derive_keys_equalizing(seed, n_bits)
    base = _fisher_yates(dims.frame_size, prng_stream(seed, b"shuffle"))
    if mode == "uniform":
        frame_perms = np.broadcast_to(base, (dims.f, dims.frame_size)).copy()
    else:
        rows = []
        for t in range(dims.f):
            extra = _fisher_yates(dims.frame_size, prng_stream(seed, b"frame-shuffle/%d" % t))
            rows.append(extra[base])
        frame_perms = np.stack(rows)
    return KeySet(seed=seed, dims=dims, factors=factors, mode=mode,
                  equalizing_key=eq_key, base_perm=base, frame_perms=frame_perms)


def derive_keys_equalizing(seed: Seed, n_bits: int) -> np.ndarray:
    return prng_stream(seed, b"equalize").bits(n_bits)


def save_keys(ks: KeySet, path) -> None:
    """Write the compact key file (secrets re-derivable, so only the seed and
    configuration are stored)."""
    doc = {
        "version": KEY_FILE_VERSION,
        "seed_hex": ks.seed.hex(),
        "dims": list(ks.dims.shape),
        "factors": [ks.factors.k_f, ks.factors.f_c, ks.factors.f_h, ks.factors.f_w],
        "mode": ks.mode,
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write key file {path}: {exc}") from exc


def load_keys(path) -> KeySet:
    """Read a key file and re-derive the full KeySet."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read key file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedKeyFile(f"key file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise MalformedKeyFile(f"key file {path} missing version field")
    if doc["version"] != KEY_FILE_VERSION:
        raise VersionMismatch(f"key file version {doc['version']} unsupported (want {KEY_FILE_VERSION})")
    try:
        seed = Seed.from_hex(doc["seed_hex"])
        dims = LatentDims(*(int(v) for v in doc["dims"]))
        factors = ReplicationFactors(*(int(v) for v in doc["factors"]))
        mode = doc["mode"]
    except (KeyError, TypeError, ValueError, ValidationError) as exc:
        raise MalformedKeyFile(f"key file {path} has malformed fields: {exc}") from exc
    if mode not in MODES:
        raise MalformedKeyFile(f"key file {path} has unknown mode {mode!r}")
    return derive_keys(seed, dims, factors, mode)
