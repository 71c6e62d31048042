"""Exception hierarchy shared by every pipeline stage."""


class RadarSegError(Exception):
    """Base class for all errors raised by :mod:`radarseg`."""

    exit_code = 4


class ConfigError(RadarSegError, ValueError):
    exit_code = 2


class FormatError(RadarSegError, ValueError):
    """Missing or unparsable cube header."""

    exit_code = 3


class SizeError(RadarSegError, ValueError):
    exit_code = 3


class DataError(RadarSegError, ValueError):
    """Input samples violate a data invariant (e.g. NaN/Inf)."""

    exit_code = 3


class StageError(RadarSegError, ValueError):
    """An image was handed to an operation out of pipeline order."""


class EmptyInputError(RadarSegError, ValueError):
    pass


class NoPeaksError(RadarSegError):
    pass


class VerticalLineError(RadarSegError, ValueError):
    pass


class ParallelLinesError(RadarSegError, ValueError):
    pass


class NoActivityError(RadarSegError):
    pass


class ConsistencyError(RadarSegError):
    pass


class IoError(RadarSegError, OSError):
    exit_code = 3


class PipelineError(RadarSegError):
    """Wraps a stage failure with the name of the stage that raised it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 4)
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
