"""Exception types shared across the package.

ConfigError and DataError map to CLI exit codes 2 and 3 respectively.
"""


class AdaptokError(Exception):
    """Base class for all package errors."""


class ConfigError(AdaptokError):
    """Invalid or inconsistent configuration (bad flags, mismatched inputs)."""


class DataError(AdaptokError):
    """Malformed or unreadable input data."""


class MissingStaticVector(AdaptokError):
    """A surface has no static embedding row; caller should fall back."""

    def __init__(self, surface: str):
        super().__init__(f"no static vector for surface {surface!r}")
        self.surface = surface


class PipelineError(AdaptokError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
