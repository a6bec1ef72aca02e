"""Exception hierarchy shared across the package."""


class MctraceError(Exception):
    """Base class for all mctrace errors."""


class TraceIOError(MctraceError, IOError):
    """Raised when a trace stream or file cannot be read."""


class InvalidInputError(MctraceError, ValueError):
    """Raised when data handed to an operation violates its contract."""


class InvalidParameterError(MctraceError, ValueError):
    """Raised when a configuration value is out of its legal range."""


class ConsistencyError(MctraceError):
    """Raised when fitted artifacts disagree with each other."""


class TrainingError(MctraceError):
    """Raised when a dataset cannot support model training."""


class ModelFormatError(MctraceError):
    """Raised when a model file cannot be parsed.

    ``position`` carries the byte offset of the failure when known.
    """

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class ModelVersionError(ModelFormatError):
    """Raised when a model file declares an unsupported schema version."""
