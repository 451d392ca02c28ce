"""
Error types for the KdV small-dispersion study.

Every numerical routine raises one of these instead of returning NaN or
a silently wrong value. The CLI turns them into one-line hints through
modules.base_operations.get_user_friendly_error().
"""


class KdVStudyError(Exception):
    """Base class for all errors raised by the study code."""


class DomainError(KdVStudyError, ValueError):
    """Argument outside the domain where a formula or solver is defined."""


class ConvergenceError(KdVStudyError):
    """
    Iterative method did not reach its tolerance.

    Attributes:
        iterations (int): Iterations (or function evaluations) spent
        residual (float): Last residual norm, if known
    """

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class SingularJacobianError(ConvergenceError):
    """Newton step could not be computed from the Jacobian."""


class QuadratureError(KdVStudyError):
    """Gauss rule failed the node-doubling check."""


class ResolutionError(KdVStudyError):
    """
    Spectral representation is not resolved.

    Attributes:
        tail (float): Relative size of the highest coefficients
    """

    def __init__(self, message, tail=None):
        super().__init__(message)
        self.tail = tail


class BlowUpError(KdVStudyError):
    """Time integration produced non-finite values."""


class ConfigError(KdVStudyError, ValueError):
    """Invalid configuration file or option value."""


class PipelineError(KdVStudyError):
    """
    A pipeline stage failed.

    Attributes:
        stage (str): Name of the failing stage
    """

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage
