"""Exception hierarchy."""


class DassdpError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(DassdpError, ValueError):
    """Tensor shapes or batch dimensions do not line up."""


class ParameterError(DassdpError, ValueError):
    """A hyperparameter or input value is outside its valid domain."""


class CalibrationError(DassdpError, ValueError):
    """The warm-up data cannot be turned into a gate calibration."""


class GateStateError(DassdpError, RuntimeError):
    """Recording after freeze, or gating before calibration."""
