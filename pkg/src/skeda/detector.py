"""Decision theory: bit accuracy, exact binomial tails, thresholds, tracing.

Detection declares a watermark present when the number of matching bits meets
the smallest count whose false-positive probability under the fair-coin null
is at most the target rate. Tracing scans a user registry with a Bonferroni
share of the global rate per user.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, EmptyRegistry, LengthMismatch, MalformedKeyFile
from .extractor import extract
from .keys import LatentDims, ReplicationFactors, Seed, derive_keys


@dataclass
class DetectionReport:
    bit_accuracy: float
    detected: bool
    threshold_bits: int
    fpr_target: float
    n_bits: int
    matched_user: str | None = None

    def to_json(self) -> dict:
        return {
            "bit_accuracy": self.bit_accuracy,
            "detected": self.detected,
            "threshold_bits": self.threshold_bits,
            "fpr_target": self.fpr_target,
            "n_bits": self.n_bits,
            "matched_user": self.matched_user,
        }


@dataclass
class RegistryEntry:
    label: str
    seed: Seed
    message: np.ndarray


def bit_accuracy(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.uint8).ravel()
    b = np.asarray(b, dtype=np.uint8).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"messages of length {a.size} and {b.size}")
    return float(np.mean(a == b))


def binomial_tail(n: int, k: int, p: float) -> float:
    """Exact P(X >= k) for X ~ Binomial(n, p), summed in log space."""
    if n < 0 or k < 0 or k > n or not (0.0 <= p <= 1.0):
        raise DomainError(f"binomial_tail domain violation: n={n}, k={k}, p={p}")
    if k == 0:
        return 1.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    log_p, log_q = math.log(p), math.log1p(-p)
    lgn = math.lgamma(n + 1)
    terms = [lgn - math.lgamma(j + 1) - math.lgamma(n - j + 1) + j * log_p + (n - j) * log_q
             for j in range(k, n + 1)]
    m = max(terms)
    s = math.fsum(math.exp(t - m) for t in terms)
    log_tail = m + math.log(s)
    return math.exp(log_tail) if log_tail < 0.0 else 1.0


@lru_cache(maxsize=256)
def detection_threshold(n: int, fpr: float) -> int:
    """Smallest k with P(X >= k | fair coin) <= fpr; n+1 means 'never'."""
    if n < 1 or not (0.0 < fpr <= 1.0):
        raise DomainError(f"detection_threshold domain violation: n={n}, fpr={fpr}")
    for k in range(n + 1):
        if binomial_tail(n, k, 0.5) <= fpr:
            return k
    return n + 1


def detect(extracted: np.ndarray, reference: np.ndarray, fpr: float = 1e-6) -> DetectionReport:
    extracted = np.asarray(extracted, dtype=np.uint8).ravel()
    reference = np.asarray(reference, dtype=np.uint8).ravel()
    if extracted.shape != reference.shape:
        raise LengthMismatch(f"messages of length {extracted.size} and {reference.size}")
    n = extracted.size
    matches = int(np.sum(extracted == reference))
    threshold = detection_threshold(n, fpr)
    return DetectionReport(bit_accuracy=matches / n, detected=matches >= threshold,
                           threshold_bits=threshold, fpr_target=fpr, n_bits=n)


def trace(latents, registry: list[RegistryEntry], dims: LatentDims, factors: ReplicationFactors,
          mode: str = "uniform", fpr: float = 1e-6, da_enabled: bool = True) -> DetectionReport:
    """Scan the registry and return the best-scoring detected user, if any.

    Each user's keys are re-derived from their seed and the latents decoded
    against them; the per-user threshold uses fpr / len(registry) so the
    global false-positive rate stays bounded by fpr.
    """
    if not registry:
        raise EmptyRegistry("registry must contain at least one user")
    per_user_fpr = fpr / len(registry)
    n = factors.n_bits(dims)
    threshold = detection_threshold(n, per_user_fpr)
    best: DetectionReport | None = None
    for entry in registry:
        ks = derive_keys(entry.seed, dims, factors, mode)
        msg, _ = extract(latents, ks, da_enabled=da_enabled)
        matches = int(np.sum(msg == np.asarray(entry.message, dtype=np.uint8)))
        report = DetectionReport(bit_accuracy=matches / n, detected=matches >= threshold,
                                 threshold_bits=threshold, fpr_target=fpr, n_bits=n,
                                 matched_user=entry.label)
        if report.detected and (best is None or report.bit_accuracy > best.bit_accuracy):
            best = report
    if best is None:
        return DetectionReport(bit_accuracy=0.0, detected=False, threshold_bits=threshold,
                               fpr_target=fpr, n_bits=n, matched_user=None)
    return best


def bits_to_hex(bits: np.ndarray) -> str:
    """Pack a bit vector MSB-first into hex (length padded up to a nibble)."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    pad = (-bits.size) % 8
    padded = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    nibbles = (bits.size + 3) // 4
    return bytes(np.packbits(padded)).hex()[:nibbles]


def hex_to_bits(hexstr: str, n_bits: int) -> np.ndarray:
    if len(hexstr) != (n_bits + 3) // 4:
        raise LengthMismatch(f"message hex has {len(hexstr)} nibbles, expected {(n_bits + 3) // 4}")
    try:
        raw = bytes.fromhex(hexstr + "0" * (-len(hexstr) % 2))
    except ValueError as exc:
        raise LengthMismatch(f"bad message hex: {exc}") from exc
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
    return bits[:n_bits]


def load_registry(path, n_bits: int) -> list[RegistryEntry]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedKeyFile(f"cannot read registry {path}: {exc}") from exc
    if not isinstance(doc, list):
        raise MalformedKeyFile(f"registry {path} must be a JSON array")
    entries = []
    labels = set()
    for item in doc:
        try:
            label = item["label"]
            seed = Seed.from_hex(item["seed_hex"])
            message = hex_to_bits(item["message_hex"], n_bits)
        except (KeyError, TypeError) as exc:
            raise MalformedKeyFile(f"registry {path} entry malformed: {exc}") from exc
        if label in labels:
            raise MalformedKeyFile(f"registry {path} has duplicate label {label!r}")
        labels.add(label)
        entries.append(RegistryEntry(label=label, seed=seed, message=message))
    return entries


def save_registry(entries: list[RegistryEntry], path) -> None:
    doc = [{"label": e.label, "seed_hex": e.seed.hex(), "message_hex": bits_to_hex(e.message)}
           for e in entries]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
