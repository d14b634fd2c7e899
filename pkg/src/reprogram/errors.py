"""Exception hierarchy shared across the package."""


class ReprogramError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(ReprogramError):
    """Tensor arguments have incompatible shapes; message names the axes."""


class NumericError(ReprogramError):
    """Non-finite values where finite ones are required."""


class UsageError(ReprogramError):
    """An API was called outside its contract (e.g. backward on a non-scalar)."""


class ContractViolation(ReprogramError):
    """Internal consistency broken, e.g. a trainable parameter missing its gradient."""


class FormatError(ReprogramError):
    """A file or byte stream does not match its declared format."""


class ConfigError(ReprogramError):
    """Invalid or unknown configuration keys/values; message carries the field path."""


class EmptyInputError(ReprogramError):
    """An operation received an empty input it cannot handle."""


class PretrainingFailedError(ReprogramError):
    """Source-model pretraining did not reach the minimum accuracy bar."""


class TrainingDivergedError(NumericError):
    """Loss became non-finite during training; carries epoch/batch diagnostics."""
