"""
Exceptions raised by the package
"""


class KerrCouplerError(Exception):
    """Root of every error raised by kerr_coupler"""


class ParameterError(KerrCouplerError, ValueError):
    """A circuit, truncation or sweep parameter is outside its valid domain"""


class MatrixError(KerrCouplerError):
    """A capacitance or inductance matrix is not positive definite"""


class PreconditionError(KerrCouplerError):
    """
    An operation was called on an object that does not satisfy its
    precondition (rigid mode not eliminated, qubits off resonance, ...)
    """


class ConfigurationError(KerrCouplerError, ValueError):
    """A run configuration or model configuration is invalid"""


class FitError(KerrCouplerError):
    """A fit could not be set up or did not converge"""


class CalibrationError(KerrCouplerError):
    """Crosstalk calibration data is insufficient or degenerate"""
