"""Exception hierarchy and process exit codes."""

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_VERIFICATION = 3
EXIT_FORMAT = 4


class BenchError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ParameterError(BenchError):
    """Invalid parameter or violated operation precondition."""

    exit_code = EXIT_PARAMETER


class EncodingError(ParameterError):
    """Grid dimensions incompatible with the requested bit packing."""


class InsufficientDataError(ParameterError):
    """Fewer data points than the requested neighbor count."""


class RegistryError(ParameterError):
    """Unknown task or variant name."""


class FormatError(BenchError):
    """Malformed input or report file.

    `offset` is the byte offset of the first bad field when it is known.
    """

    exit_code = EXIT_FORMAT

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (offset {offset})"
        super().__init__(message)
        self.offset = offset


class VerificationError(BenchError):
    """A variant disagreed with its oracle."""

    exit_code = EXIT_VERIFICATION
