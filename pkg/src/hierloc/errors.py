"""Exception types shared across the toolkit."""


class HierlocError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(HierlocError):
    """A config value is missing, malformed, or inconsistent."""


class IntegrityError(HierlocError):
    """Inputs reference nodes/edges that do not belong together."""


class InvalidMeasurementError(HierlocError):
    """A range measurement is non-positive or otherwise unusable."""


class DegenerateWeightsError(HierlocError):
    """All candidate weights collapsed to zero (inconsistent messages)."""
