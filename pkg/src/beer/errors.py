"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class DegenerateVectorError(ValueError):
    """A vector norm is at or below the norm floor (a zero representation or head)."""


class GradientError(RuntimeError):
    """Misuse of the differentiation tape (non-scalar loss, detached loss, double backward)."""


class UnderfullBufferError(ValueError):
    """The replay buffer holds fewer transitions than requested."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""


class CheckpointError(RuntimeError):
    """A checkpoint file could not be read back."""


class ChecksumError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class TruncatedCheckpointError(CheckpointError):
    pass


class EpisodeFinishedError(RuntimeError):
    """An environment was stepped after its episode ended; call reset() first."""
