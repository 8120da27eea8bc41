"""Exception hierarchy shared by all modules."""


class CGDError(Exception):
    """Base class for every error raised by :mod:`cgd`."""


class DimensionError(CGDError, ValueError):
    """Array lengths or operator shapes do not agree."""


class DomainError(CGDError, ValueError):
    """A scalar argument lies outside the domain of the function."""


class DegenerateInputError(CGDError, ValueError):
    """Input is well-formed but makes the requested quantity undefined."""


class DecodeError(CGDError, ValueError):
    """A bit stream is malformed for the code that is decoding it."""


class SizeError(CGDError, ValueError):
    """An exhaustive search or enumeration would exceed its size guard."""


class CodecAdapterError(CGDError, RuntimeError):
    """An external codec failed; ``diagnostics`` carries its captured output."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(CGDError, ValueError):
    """An experiment configuration could not be parsed or validated."""
