"""Exception taxonomy shared by all engine modules."""


class TfmlpError(Exception):
    """Base class for all engine errors."""


class ConfigError(TfmlpError, ValueError):
    """Invalid configuration: shape mismatch, bad hyperparameter, incomplete plan."""


class FramingError(TfmlpError, ValueError):
    """Audio chunk with the wrong length or layout."""


class NumericError(TfmlpError, ArithmeticError):
    """Non-finite values or accumulator overflow in a numeric kernel."""


class FormatError(TfmlpError, ValueError):
    """Malformed model container or audio file.

    Carries ``offset`` (byte position of the problem) when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class SchemaError(FormatError):
    """Container tensor set does not match the model graph."""


class DomainError(TfmlpError, ValueError):
    """Metric input outside its mathematical domain (e.g. all-zero reference)."""


class VerificationError(TfmlpError):
    """An oracle suite found a tolerance breach."""
