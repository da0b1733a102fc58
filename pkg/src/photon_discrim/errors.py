"""Exception hierarchy shared by every module in the package."""


class PhotonDiscrimError(Exception):
    """Base class for all package errors."""


class DomainError(PhotonDiscrimError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CapacityError(DomainError):
    """Too many pulses requested for one time bin."""

    def __init__(self, bin_index: int, count: int, capacity: int):
        self.bin_index = bin_index
        self.count = count
        self.capacity = capacity
        super().__init__(
            f"bin {bin_index} holds {count} photons but only {capacity} pulses fit"
        )


class ConfigurationError(PhotonDiscrimError, ValueError):
    """Inconsistent or unusable configuration."""


class TrainingError(PhotonDiscrimError, RuntimeError):
    """Training diverged (non-finite parameters or loss)."""

    def __init__(self, message: str, epoch: int | None = None, learning_rate: float | None = None):
        self.epoch = epoch
        self.learning_rate = learning_rate
        super().__init__(message)


class NumericError(PhotonDiscrimError, ArithmeticError):
    """A numerical accumulation produced a non-finite value."""
