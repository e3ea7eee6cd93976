"""Exception hierarchy shared by all skeda modules.

ValidationError subclasses map to CLI exit code 2 (caller mistake),
everything else under SkedaError maps to exit code 1.
"""


class SkedaError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SkedaError):
    """Bad inputs supplied by the caller (shapes, lengths, parameter ranges)."""


class NonDividingFactors(ValidationError):
    """Replication factors do not evenly divide the latent dimensions."""


class LengthMismatch(ValidationError):
    """Two bit vectors that must be equally long are not."""


class ShapeMismatch(ValidationError):
    """Tensor shapes disagree with each other or with the key configuration."""


class DimMismatch(ValidationError):
    """Received latent frames are inconsistent with the key's latent dims."""


class DomainError(ValidationError):
    """Numeric argument outside the mathematical domain of the operation."""


class BadParams(ValidationError):
    """Channel parameters outside their documented ranges."""


class EmptyGrid(ValidationError):
    """A parameter sweep was requested over an empty grid."""


class EmptyInput(ValidationError):
    """An operation requiring at least one element received none."""


class NoFrames(ValidationError):
    """Extraction called with an empty frame list."""


class EmptyRegistry(ValidationError):
    """Traceability scan over an empty user registry."""


class NonFiniteInput(ValidationError):
    """A latent tensor contains NaN or infinite values."""


class ConfigError(ValidationError):
    """Malformed experiment configuration."""


class IoError(SkedaError):
    """Underlying file could not be read or written."""


class MalformedKeyFile(IoError):
    """Key (or latent / registry) file does not parse as its documented format."""


class MalformedLatentFile(MalformedKeyFile):
    """Latent container is truncated or carries a bad magic/dims header."""


class VersionMismatch(IoError):
    """File declares a format version this build does not understand."""
