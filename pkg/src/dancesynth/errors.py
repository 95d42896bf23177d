"""Exception types shared across the package."""


class DanceSynthError(Exception):
    """Base class for all package errors."""


class DimensionError(DanceSynthError, ValueError):
    """Array shapes do not agree.

    ``axis`` names the offending axis when one can be identified.
    """

    def __init__(self, message, axis=None):
        if axis is not None:
            message = f"{message} (axis {axis})"
        super().__init__(message)
        self.axis = axis


class ValidationError(DanceSynthError, ValueError):
    """Input data violates a documented invariant."""


class ParameterError(DanceSynthError, ValueError):
    """A configuration or call parameter is out of range."""


class DataError(DanceSynthError):
    """A dataset is missing pieces needed by the requested operation."""


class StateError(DanceSynthError, RuntimeError):
    """An object is not in a state that allows the requested operation."""
