"""Exception hierarchy shared across the package."""


class Da3dError(Exception):
    """Base class for all errors raised by da3d."""


class ShapeError(Da3dError, ValueError):
    """Array dimensions do not match what a network or operation expects."""


class NonFiniteError(Da3dError, FloatingPointError):
    """A loss, gradient or activation became NaN or infinite."""


class DataError(Da3dError, ValueError):
    """Input data is missing, malformed or insufficient."""


class ConfigError(Da3dError, ValueError):
    """A training configuration is invalid."""


class CheckpointError(Da3dError):
    """Base class for checkpoint decoding failures."""


class BadMagicError(CheckpointError):
    """File does not start with the checkpoint magic bytes."""


class VersionMismatchError(CheckpointError):
    """Checkpoint was written with an unsupported format version."""


class TruncatedCheckpointError(CheckpointError):
    """Checkpoint ended before all declared content was read."""


class TrainingDivergedError(NonFiniteError):
    """Training produced a non-finite loss; carries the phase, epoch and batch."""
