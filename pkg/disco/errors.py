"""Exception hierarchy for pydisco."""
from typing import Any, Dict, Optional


class DiscoError(Exception):
    """Base class for all errors raised by pydisco."""


class DimensionError(DiscoError):
    """Shapes or extents are inconsistent."""


class ParameterError(DiscoError):
    """A scalar parameter is outside its valid range."""


class ConfigError(DiscoError):
    """A configuration value is invalid, unknown or missing."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class FormatError(DiscoError):
    """A binary file does not follow its documented layout."""

    def __init__(self, message: str, offset: Optional[int] = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class NumericalError(DiscoError):
    """A forward computation produced NaN or Inf."""


class TrainingError(DiscoError):
    """Optimization diverged."""

    def __init__(self, message: str, step: int, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(f"{message} (step {step})")
        self.step = step
        self.diagnostics = diagnostics or {}
