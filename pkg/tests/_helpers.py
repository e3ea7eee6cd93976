"""Shared test utilities: fixed streams, brute-force reference decoders."""
import numpy as np

from skeda.keys import KeySet


class FixedStream:
    """Stand-in for a KeyStream that yields preset uniforms."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.float64).ravel()

    def uniforms(self, n):
        assert n == self.values.size
        return self.values.copy()


def brute_force_decode(latents, ks: KeySet) -> np.ndarray:
    """Independent reference decoder: enumerates every copy position of every
    bit directly from the tiling/permutation definitions and majority-votes
    (ties to 0), then undoes the equalizer. Deliberately loop-based."""
    f, c, h, w = ks.dims.shape
    fb, cb, hb, wb = ks.factors.base_shape(ks.dims)
    n_bits = ks.n_bits
    frames = [np.asarray(x).ravel() for x in latents]

    inverses = []
    for t in range(len(frames)):
        perm = ks.frame_perms[t]
        inv = [0] * len(perm)
        for i, q in enumerate(perm):
            inv[q] = i
        inverses.append(inv)

    bits = np.zeros(n_bits, dtype=np.uint8)
    for k in range(n_bits):
        t0, c0, h0, w0 = np.unravel_index(k, (fb, cb, hb, wb))
        votes = []
        for t, vals in enumerate(frames):
            if t % fb != t0:
                continue
            for i in range(ks.factors.f_c):
                for j in range(ks.factors.f_h):
                    for l in range(ks.factors.f_w):
                        cc = c0 + i * cb
                        hh = h0 + j * hb
                        ww = w0 + l * wb
                        q = (cc * h + hh) * w + ww
                        votes.append(1 if vals[inverses[t][q]] > 0 else 0)
        mean = sum(votes) / len(votes)
        bits[k] = 1 if mean > 0.5 else 0
    return bits ^ ks.equalizing_key
