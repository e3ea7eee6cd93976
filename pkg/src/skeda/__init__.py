"""skeda: shuffle-key latent-noise video watermark codec and evaluation kit."""

from .channels import ChannelSpec, apply, sweep
from .codec import embed, equalize, normal_ppf, replicate, sample_latent, shuffle, unshuffle
from .detector import (DetectionReport, RegistryEntry, binomial_tail, bit_accuracy,
                       detect, detection_threshold, trace)
from .extractor import (DAScores, ExtractionDiagnostics, aggregate_frames, block_scores,
                        da_scores, da_weights, decide_bits, decode_frame, extract,
                        identify_frame_permutation)
from .keys import (DEFAULT_DIMS, DEFAULT_FACTORS, KeySet, KeyStream, LatentDims,
                   ReplicationFactors, Seed, derive_keys, load_keys, prng_stream, save_keys)
from .latent_io import read_latent, write_latent

__version__ = "0.1.0"

__all__ = [
    "ChannelSpec", "apply", "sweep",
    "embed", "equalize", "normal_ppf", "replicate", "sample_latent", "shuffle", "unshuffle",
    "DetectionReport", "RegistryEntry", "binomial_tail", "bit_accuracy",
    "detect", "detection_threshold", "trace",
    "DAScores", "ExtractionDiagnostics", "aggregate_frames", "block_scores",
    "da_scores", "da_weights", "decide_bits", "decode_frame", "extract",
    "identify_frame_permutation",
    "DEFAULT_DIMS", "DEFAULT_FACTORS", "KeySet", "KeyStream", "LatentDims",
    "ReplicationFactors", "Seed", "derive_keys", "load_keys", "prng_stream", "save_keys",
    "read_latent", "write_latent",
]
