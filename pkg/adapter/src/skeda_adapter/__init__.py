"""Bridge between the latent watermark codec and a video generation pipeline.

Talks to the codec purely through its external interfaces: the SKDL latent
container, key JSON files, and the `skeda` command line.
"""
from .backend import GenerationJob, InversionJob, generate, invert
from .calibrate import calibrate, to_channel_spec
from .errors import (AdapterError, CodecError, DecodeError, ModelLoadError, ShapeMismatch,
                     ValidationError)

__version__ = "0.1.0"

__all__ = [
    "GenerationJob", "InversionJob", "generate", "invert", "calibrate", "to_channel_spec",
    "AdapterError", "CodecError", "DecodeError", "ModelLoadError", "ShapeMismatch",
    "ValidationError", "__version__",
]
