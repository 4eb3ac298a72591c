"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class SceneError(SimulationError):
    """Scene file or geometry is invalid (parse error, duplicate ids, ...)."""


class SpectralError(SimulationError):
    """Spectral library file is invalid or a lookup is out of range."""


class ConfigError(SimulationError):
    """Run configuration failed validation; message names the offending field."""


class FrustumError(SimulationError):
    """A beam mapped outside its capture frustum (indicates a capture-plan bug)."""
