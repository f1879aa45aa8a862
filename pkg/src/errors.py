"""Exception types shared across the simulator."""

from typing import Optional


class SimulationError(Exception):
    """Base class for failures raised while configuring or running a simulation."""


class ConfigurationError(SimulationError, ValueError):
    """Raised when a configuration value is malformed or cannot be satisfied.

    Args:
        message: Human-readable description of the problem.
        key: Name of the offending configuration key, if known.
    """

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        if key is not None and key not in message:
            message = f"{key}: {message}"
        super().__init__(message)
