"""Extraction side: sign decode, frame weighting, aggregation, block vote.

Recovers the message from a possibly distorted, reordered, or shortened frame
stack. Frames are decoded to hard bits by sign, weighted (uniformly or by the
differential-attention scheme), aggregated position-wise, un-permuted, and the
replicated copies of each bit are averaged and thresholded at 0.5.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import equalize, unshuffle_frame
from .errors import (DimMismatch, EmptyInput, LengthMismatch, NoFrames, NonFiniteInput,
                     ShapeMismatch, ValidationError)
from .keys import KeySet, LatentDims, ReplicationFactors


@dataclass
class DAScores:
    """Cosine similarities backing the frame weights.

    S[t] is the similarity of frame t to the reference (first) frame; A is the
    full pairwise cosine matrix.
    """

    S: np.ndarray
    A: np.ndarray


@dataclass
class ExtractionDiagnostics:
    n_frames: int
    weights: np.ndarray
    block_scores: np.ndarray
    da: DAScores | None = None
    frame_ids: list[tuple[int, float]] | None = None


def decode_frame(frame: np.ndarray) -> np.ndarray:
    """Hard-decide one frame: bit 1 iff the element is > 0 (ties to 0)."""
    frame = np.asarray(frame)
    if not np.all(np.isfinite(frame)):
        raise NonFiniteInput("frame contains NaN or infinite values")
    return (frame > 0).astype(np.uint8)


def _flatten_frames(frames) -> np.ndarray:
    mats = [np.asarray(f, dtype=np.float64).ravel() for f in frames]
    return np.stack(mats)


def da_scores(frames) -> DAScores:
    """Cosine similarity of every frame to the reference frame and pairwise.

    Zero-norm frames get similarity 0 rather than NaN.
    """
    if len(frames) == 0:
        raise EmptyInput("da_scores needs at least one frame")
    F = _flatten_frames(frames)
    norms = np.linalg.norm(F, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    U = F / safe[:, None]
    U[norms == 0] = 0.0
    A = np.clip(U @ U.T, -1.0, 1.0)
    return DAScores(S=A[0].copy(), A=A)


def da_weights(scores: DAScores) -> np.ndarray:
    """Softmax over S_t + sum_i A_{t,i}; shift-invariant and sums to 1."""
    combined = scores.S + scores.A.sum(axis=1)
    z = combined - combined.max()
    e = np.exp(z)
    return e / e.sum()


def uniform_weights(n_frames: int) -> np.ndarray:
    return np.full(n_frames, 1.0 / n_frames)


def aggregate_frames(bitfields, weights: np.ndarray) -> np.ndarray:
    """Position-wise convex combination of per-frame bit fields."""
    weights = np.asarray(weights, dtype=np.float64)
    stack = np.stack([np.asarray(b) for b in bitfields]).astype(np.float64)
    if weights.ndim != 1 or weights.shape[0] != stack.shape[0]:
        raise ShapeMismatch(f"{weights.shape[0]} weights for {stack.shape[0]} frames")
    if stack.ndim < 2:
        raise ShapeMismatch("bitfields must be at least 1-D each")
    if np.all(weights == weights[0]):
        # Uniform vote: integer-valued summation is exact, which makes the
        # result bit-identical under any reordering of the input frames.
        return stack.mean(axis=0)
    return np.tensordot(weights, stack, axes=1)


def block_scores(soft: np.ndarray, dims: LatentDims, factors: ReplicationFactors) -> np.ndarray:
    """Mean over the spatial copies of every message bit.

    `soft` has shape (f/k_f, c, h, w): frame copies are already collapsed by
    aggregation, so only the (f_c, f_h, f_w) tiling remains to fold.
    """
    fb, cb, hb, wb = factors.base_shape(dims)
    soft = np.asarray(soft, dtype=np.float64)
    if soft.shape != (fb, dims.c, dims.h, dims.w):
        raise ShapeMismatch(f"soft field shape {soft.shape}, expected {(fb, dims.c, dims.h, dims.w)}")
    folded = soft.reshape(fb, factors.f_c, cb, factors.f_h, hb, factors.f_w, wb)
    return folded.mean(axis=(1, 3, 5)).ravel()


def decide_bits(M: np.ndarray, equalizing_key: np.ndarray) -> np.ndarray:
    """Threshold the block scores at 0.5 (ties to 0) and undo the equalizer."""
    M = np.asarray(M, dtype=np.float64)
    key = np.asarray(equalizing_key, dtype=np.uint8)
    if M.shape != key.shape:
        raise LengthMismatch(f"{M.shape[0]} scores vs key length {key.shape[0]}")
    return equalize((M > 0.5).astype(np.uint8), key)


def identify_frame_permutation(frame_bits: np.ndarray, ks: KeySet) -> tuple[int, float]:
    """Find which frame permutation a decoded frame was shuffled with.

    For each candidate frame index, the frame is un-permuted and scored by the
    agreement of each bit's copies: mean over bits of max(p, 1-p) where p is
    the ones-fraction inside the bit's copy block. The true candidate scores
    1.0 on a clean frame.
    """
    if ks.dims.f // ks.factors.k_f != 1:
        raise ValidationError("frame identification requires the message to fit in one frame (f == k_f)")
    flat = np.asarray(frame_bits, dtype=np.float64).ravel()
    if flat.size != ks.dims.frame_size:
        raise DimMismatch(f"frame has {flat.size} elements, expected {ks.dims.frame_size}")
    best_idx, best_score = 0, -1.0
    for t in range(ks.dims.f):
        un = unshuffle_frame(flat, ks.frame_perms[t])
        p = block_scores(un.reshape(1, ks.dims.c, ks.dims.h, ks.dims.w), ks.dims, ks.factors)
        score = float(np.mean(np.maximum(p, 1.0 - p)))
        if score > best_score:
            best_idx, best_score = t, score
    return best_idx, best_score


def extract(latents, ks: KeySet, da_enabled: bool = True) -> tuple[np.ndarray, ExtractionDiagnostics]:
    """Full decoding pipeline; accepts any nonempty list of latent frames.

    uniform mode needs no frame identity and tolerates arbitrary reordering
    and dropping (when the message fits in one frame); per_frame mode first
    identifies each frame's permutation, then proceeds identically.
    """
    frames = [np.asarray(fr) for fr in latents]
    if len(frames) == 0:
        raise NoFrames("extract needs at least one frame")
    spatial = (ks.dims.c, ks.dims.h, ks.dims.w)
    for fr in frames:
        if fr.shape != spatial:
            raise DimMismatch(f"frame shape {fr.shape} != key latent slice {spatial}")
    f_recv = len(frames)
    fb = ks.dims.f // ks.factors.k_f

    hard = np.stack([decode_frame(fr) for fr in frames])

    if da_enabled and f_recv > 1:
        scores = da_scores(frames)
        weights = da_weights(scores)
    else:
        scores = None
        weights = uniform_weights(f_recv)

    frame_ids = None
    if ks.mode == "per_frame":
        if fb != 1:
            raise ValidationError("per_frame mode requires f == k_f")
        frame_ids = []
        unshuffled = []
        flat = hard.reshape(f_recv, ks.dims.frame_size)
        for t in range(f_recv):
            idx, score = identify_frame_permutation(flat[t], ks)
            frame_ids.append((idx, score))
            unshuffled.append(unshuffle_frame(flat[t].astype(np.float64), ks.frame_perms[idx]))
        soft = aggregate_frames([u.reshape(spatial) for u in unshuffled], weights)
        soft4 = soft[None]
    elif fb == 1:
        soft = aggregate_frames(hard, weights)
        soft4 = unshuffle_frame(soft.ravel(), ks.base_perm).reshape((1,) + spatial)
    else:
        # Message spans frame groups: original frame order and count required.
        if f_recv != ks.dims.f:
            raise DimMismatch(f"factors span frames (f/k_f={fb}); need all {ks.dims.f} frames in order")
        soft4 = np.empty((fb,) + spatial)
        for g in range(fb):
            sel = np.arange(g, ks.dims.f, fb)
            w_g = weights[sel]
            w_g = w_g / w_g.sum()
            grp = aggregate_frames(hard[sel], w_g)
            soft4[g] = unshuffle_frame(grp.ravel(), ks.base_perm).reshape(spatial)

    M = block_scores(soft4, ks.dims, ks.factors)
    msg = decide_bits(M, ks.equalizing_key)
    diag = ExtractionDiagnostics(n_frames=f_recv, weights=weights, block_scores=M,
                                 da=scores, frame_ids=frame_ids)
    return msg, diag
