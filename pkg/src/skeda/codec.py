"""Embedding side: equalize, replicate, shuffle, and half-Gaussian sampling.

The sampler realizes distribution-preserving embedding: each binary value i is
mapped to alpha = ppf((i + u) / 2) with u uniform in (0, 1), so bit 0 lands in
(-inf, 0], bit 1 in (0, inf), and the marginal of alpha stays N(0, 1) when the
carried bits are unbiased.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

from .errors import DomainError, LengthMismatch, ShapeMismatch
from .keys import KeySet, KeyStream, LatentDims, ReplicationFactors, prng_stream


def normal_ppf(p):
    """Standard normal quantile function, |error| < 1e-9 on (0, 1).

    Thin wrapper over scipy's ndtri with strict domain validation. Accepts
    scalars or arrays; raises DomainError outside the open interval (0, 1).
    """
    arr = np.asarray(p, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError("normal_ppf requires 0 < p < 1")
    x = ndtri(arr)
    return float(x[0]) if scalar else x


def equalize(bits: np.ndarray, key: np.ndarray) -> np.ndarray:
    """XOR the message with the equalizing key (involution)."""
    bits = np.asarray(bits, dtype=np.uint8)
    key = np.asarray(key, dtype=np.uint8)
    if bits.shape != key.shape:
        raise LengthMismatch(f"message length {bits.shape} != key length {key.shape}")
    return bits ^ key


def replicate(bits: np.ndarray, dims: LatentDims, factors: ReplicationFactors) -> np.ndarray:
    """Tile the message into the latent shape.

    The message is reshaped row-major to (f/k_f, c/f_c, h/f_h, w/f_w) and
    tiled (k_f, f_c, f_h, f_w) times, so every bit has factors.copies copies.
    """
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    n_bits = factors.n_bits(dims)
    if bits.size != n_bits:
        raise LengthMismatch(f"message has {bits.size} bits, key config wants {n_bits}")
    base = bits.reshape(factors.base_shape(dims))
    return np.tile(base, (factors.k_f, factors.f_c, factors.f_h, factors.f_w))


def shuffle(field: np.ndarray, ks: KeySet) -> np.ndarray:
    """Permute each frame's flattened c*h*w positions by that frame's key."""
    field = np.asarray(field)
    if field.shape != ks.dims.shape:
        raise ShapeMismatch(f"field shape {field.shape} != latent dims {ks.dims.shape}")
    flat = field.reshape(ks.dims.f, ks.dims.frame_size)
    out = np.take_along_axis(flat, ks.frame_perms, axis=1)
    return out.reshape(ks.dims.shape)


def unshuffle(field: np.ndarray, ks: KeySet) -> np.ndarray:
    """Exact inverse of shuffle."""
    field = np.asarray(field)
    if field.shape != ks.dims.shape:
        raise ShapeMismatch(f"field shape {field.shape} != latent dims {ks.dims.shape}")
    flat = field.reshape(ks.dims.f, ks.dims.frame_size)
    out = np.empty_like(flat)
    np.put_along_axis(out, ks.frame_perms, flat, axis=1)
    return out.reshape(ks.dims.shape)


def unshuffle_frame(frame_flat: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Invert one frame permutation on a flattened frame."""
    out = np.empty_like(frame_flat)
    out[perm] = frame_flat
    return out


def sample_latent(field: np.ndarray, stream: KeyStream) -> np.ndarray:
    """Map every bit to a half-Gaussian draw: alpha = ppf((bit + u) / 2).

    The stream contract keeps u strictly inside (0, 1), so alpha is always
    finite and sign(alpha) recovers the bit (ties at 0 belong to bit 0).
    """
    field = np.asarray(field, dtype=np.float64)
    u = stream.uniforms(field.size).reshape(field.shape)
    alpha = normal_ppf((field + u) / 2.0)
    return alpha.astype(np.float32)


def embed(msg: np.ndarray, ks: KeySet, stream: KeyStream | None = None) -> np.ndarray:
    """Full embedding pipeline: sample . shuffle . replicate . equalize."""
    if stream is None:
        stream = prng_stream(ks.seed, b"sample")
    eq = equalize(np.asarray(msg, dtype=np.uint8).ravel(), ks.equalizing_key)
    field = replicate(eq, ks.dims, ks.factors)
    field = shuffle(field, ks)
    return sample_latent(field, stream)
