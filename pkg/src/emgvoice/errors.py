"""Error taxonomy used for CLI exit-status categorization."""


class EmgVoiceError(Exception):
    """Base class for package errors."""

    category = "general"


class ConfigError(EmgVoiceError):
    """Invalid configuration, flags, or incompatible stage inputs."""

    category = "config"


class DataError(EmgVoiceError):
    """Corpus, manifest, or file-format problems."""

    category = "data"


class NumericError(EmgVoiceError):
    """Numerical failures: non-finite losses, rank-deficient solves."""

    category = "numeric"
