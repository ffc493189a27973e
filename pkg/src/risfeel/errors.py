"""Exception types shared across the simulator."""


class RisFeelError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(RisFeelError, ValueError):
    """Invalid configuration value or file."""


class DimensionError(RisFeelError, ValueError):
    """Array shapes do not match the declared system dimensions."""


class DegenerateChannelError(RisFeelError, ValueError):
    """A selected device has a (near-)zero effective channel."""

    def __init__(self, device: int, magnitude: float):
        self.device = device
        self.magnitude = magnitude
        super().__init__(
            f"device {device} has effective channel magnitude {magnitude:.3e}; "
            "channel inversion is not possible"
        )


class UsageError(RisFeelError, ValueError):
    """An operation was called with arguments outside its contract."""


class FormatError(RisFeelError, ValueError):
    """A file does not match the expected binary/text format."""
