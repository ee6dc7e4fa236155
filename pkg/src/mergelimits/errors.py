"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 2, NumericError -> 3,
file/format problems -> 4.
"""


class MergeLimitsError(Exception):
    """Base class for all package errors."""


class ConfigError(MergeLimitsError):
    """Invalid argument, parameter set, or experiment configuration."""


class NumericError(MergeLimitsError):
    """Non-finite values or failed numeric procedure."""


class FormatError(MergeLimitsError):
    """Malformed binary file (bad magic, truncation, size mismatch)."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
