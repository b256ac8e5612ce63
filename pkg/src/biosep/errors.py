"""Exception types shared across the package.

Each error carries a short ``code`` used by the CLI when reporting
failures on stderr (exception class name minus the ``Error`` suffix).
"""


class BiosepError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        name = type(self).__name__
        return name[:-5] if name.endswith("Error") else name


class UnsupportedFormatError(BiosepError):
    """Audio file is not mono PCM16 or mono float32 WAV."""


class CorruptHeaderError(BiosepError):
    """WAV chunk structure is inconsistent with the file contents."""


class EmptySignalError(BiosepError):
    """An operation that needs samples received an empty signal."""


class InvalidConfigError(BiosepError):
    """Configuration values violate a documented constraint."""


class ShapeMismatchError(BiosepError):
    """Matrix operands do not compose."""


class EmptyInputError(BiosepError):
    """Degenerate input, e.g. an all-zero matrix handed to factorize."""


class ZeroEnergyError(BiosepError):
    """A spectral statistic was requested for a zero-energy spectrogram."""


class InvalidParamsError(BiosepError):
    """Synthesis parameters are out of range."""


class SampleRateMismatchError(BiosepError):
    """Signals with different sample rates cannot be combined."""


class BackendUnreachableError(BiosepError):
    """The remote interpretation endpoint could not be reached."""


def error_code(exc: BaseException) -> str:
    """Stable short name for an exception, for CLI stderr reporting."""
    if isinstance(exc, BiosepError):
        return exc.code
    if isinstance(exc, FileNotFoundError):
        return "FileNotFound"
    if isinstance(exc, OSError):
        return "Io"
    name = type(exc).__name__
    if name.endswith("Error") and len(name) > 5:
        return name[:-5]
    return name
