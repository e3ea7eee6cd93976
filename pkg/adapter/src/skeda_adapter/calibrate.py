"""Measure how much the pipeline perturbs a latent on its way through.

Compares an embedded latent against its recovery and summarizes the damage as
an additive-noise standard deviation plus an element sign-flip rate. The
result maps directly onto the codec's `inversion_proxy` channel (params
`sigma` and `flip_p`), so a single calibration run makes the latent-only
simulator mimic the measured pipeline.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch


def calibrate(clean: np.ndarray, recovered: np.ndarray) -> dict:
    clean = np.asarray(clean, dtype=np.float64)
    recovered = np.asarray(recovered, dtype=np.float64)
    if clean.shape != recovered.shape:
        raise ShapeMismatch(f"latent shapes differ: {clean.shape} vs {recovered.shape}")
    residual = recovered - clean
    flips = np.mean((clean > 0) != (recovered > 0))
    return {
        "sigma_inv": float(residual.std()),
        "flip_rate": float(flips),
        "n_elements": int(clean.size),
    }


def to_channel_spec(report: dict, seed_hex: str) -> dict:
    """Render a calibration report as an `inversion_proxy` channel spec JSON."""
    return {
        "kind": "inversion_proxy",
        "params": {"sigma": report["sigma_inv"], "flip_p": report["flip_rate"]},
        "seed_hex": seed_hex,
    }
