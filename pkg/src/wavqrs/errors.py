"""Exception hierarchy shared by the library and the command-line frontend."""


class WavqrsError(Exception):
    """Base class for every error raised deliberately by this package."""


class ProcessingError(WavqrsError, ValueError):
    """Invalid numerical input or configuration."""


class InvalidFilterError(ProcessingError):
    pass


class LevelError(ProcessingError):
    pass


class TooShortError(ProcessingError):
    pass


class BandError(ProcessingError):
    pass


class CorruptDecompositionError(ProcessingError):
    pass


class ShapeError(ProcessingError):
    pass


class UndefinedCorrelationError(ProcessingError):
    pass


class OrderingError(ProcessingError):
    pass


class UndefinedSensitivityError(ProcessingError):
    pass


class ConfigError(ProcessingError):
    pass


class ParseError(WavqrsError, ValueError):
    """A file could not be decoded.

    ``line`` or ``offset`` is set when the failure can be pinned to a
    position in the input.
    """

    def __init__(self, message, *, path=None, line=None, offset=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte {offset}")
        super().__init__(f"{': '.join(where)}: {message}" if where else message)
        self.path = path
        self.line = line
        self.offset = offset


class UnsupportedFormatError(ParseError):
    pass


class TruncationError(ParseError):
    pass


class EmptySignalError(ParseError):
    pass


class ChannelError(WavqrsError, IndexError):
    pass
