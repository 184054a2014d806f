"""Exception hierarchy shared by all engine components."""


class MaskingError(Exception):
    """Base class for every error raised by this package."""


class FormatError(MaskingError):
    """Malformed media or document data.

    Carries the byte offset of the offending data when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedFormatError(MaskingError):
    """Data is structurally valid but uses a codec/layout we do not handle."""


class ParameterError(MaskingError):
    """A parameter value violates the documented contract."""


class ConfigError(MaskingError):
    """A configuration document failed validation.

    ``path`` is the dotted field path of the first violation.
    """

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class NotFoundError(MaskingError):
    """Referenced entity (job, chunk, preset, worker) does not exist."""


class UnknownWorkerError(MaskingError):
    """A worker-scoped request came from an unregistered or lost worker."""


class ConflictError(MaskingError):
    """Request is valid but conflicts with current orchestration state."""


class InputError(MaskingError):
    """Input media is missing or unusable for the requested operation."""


class PlannerError(MaskingError):
    """Chunk planning or temporal-context requirements were violated."""


class TranscoderMissingError(MaskingError):
    """The external transcoder binary is not available."""


class TranscodeError(MaskingError):
    """The external transcoder ran but failed."""


class NumericError(MaskingError):
    """A numerical routine left its validated operating range."""


class UndefinedResultError(MaskingError):
    """The requested metric is undefined for the given inputs."""
