class HoloSimError(ValueError):
    """Base class of every error raised by the simulator."""


class GridMismatchError(HoloSimError):
    """Raised when fields, phases or specs disagree on grid or wavelength."""


class TargetLoadError(HoloSimError):
    """Raised when a target image cannot be read or has no usable content."""


class DegenerateFieldError(HoloSimError):
    """Raised when the reconstructed field vanishes on the whole plane."""


class SolverAbortedError(HoloSimError):
    """Raised when an iterative solver hits a non-finite loss."""


class CalibrationError(HoloSimError):
    """Raised when shift estimation has too little correlation to be trusted."""


class ConfigError(HoloSimError):
    """Raised for invalid experiment configuration."""
