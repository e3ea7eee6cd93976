"""Exception hierarchy for the pipeline adapter."""


class AdapterError(Exception):
    """Base class for all adapter failures."""


class ValidationError(AdapterError):
    """Bad job parameters or mismatched shapes (CLI exit code 2)."""


class ShapeMismatch(ValidationError):
    pass


class ModelLoadError(AdapterError):
    """The requested generation backend cannot be loaded."""


class DecodeError(AdapterError):
    """A video or latent file cannot be decoded."""


class CodecError(AdapterError):
    """A video transcode tool (e.g. ffmpeg) is missing or failed."""
