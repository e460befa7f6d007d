"""Exception hierarchy. The CLI maps each family onto its own exit code."""


class SleepTDAError(Exception):
    """Base class for all package errors."""


class ValidationError(SleepTDAError, ValueError):
    """Input violates a documented precondition."""


class InvalidParameterError(ValidationError):
    pass


class AlignmentError(ValidationError):
    """Annotation interval not aligned to the epoch grid."""


class EmptyBandError(ValidationError):
    """A frequency band contains no Fourier bins."""


class CapacityError(ValidationError):
    """Problem size exceeds what the routine supports."""


class IncompatibleGridError(ValidationError):
    """Landscapes sampled on different grids or with different level counts."""


class InvalidInputError(ValidationError):
    pass


class StudyFormatError(ValidationError):
    """Malformed study manifest, signal file or annotation file."""


class ChannelLengthError(StudyFormatError):
    def __init__(self, channel, length, expected):
        super().__init__(f"channel {channel!r} has {length} samples, expected {expected}")
        self.channel = channel


class AnnotationError(StudyFormatError):
    def __init__(self, row, message):
        super().__init__(f"annotation row {row}: {message}")
        self.row = row


class AnnotationRangeError(AnnotationError):
    """Annotation extends beyond the end of the signal."""


class NonFiniteSampleError(StudyFormatError):
    def __init__(self, channel, count):
        super().__init__(f"channel {channel!r} contains {count} non-finite samples")
        self.channel = channel
        self.count = count


class MissingFileError(SleepTDAError, FileNotFoundError):
    pass


class ArchiveError(SleepTDAError):
    """Corrupt or unreadable archive record."""

    def __init__(self, key, message):
        super().__init__(f"record {key}: {message}")
        self.key = key
