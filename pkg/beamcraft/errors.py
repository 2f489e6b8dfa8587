"""
Exception hierarchy for beamcraft.
"""
import numpy as np


class BeamcraftError(Exception):
    """Root of every error raised by the library."""


class ConfigurationError(BeamcraftError, ValueError):
    """Invalid parameter, scenario field or input shape."""


class SingularCovarianceError(BeamcraftError, np.linalg.LinAlgError):
    """A covariance stayed numerically singular after diagonal loading.

    Args:
        message: Human readable description.
        condition: Condition number estimate of the offending matrix.
    """

    def __init__(self, message, condition=np.inf):
        super().__init__(f'{message} (condition ~ {condition:.3e})')
        self.condition = condition


class SolverDivergedError(BeamcraftError, ArithmeticError):
    """The conjugate gradient iteration produced non-finite values."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class PipelineError(BeamcraftError, RuntimeError):
    """An error raised inside a pipeline stage, labelled with that stage."""

    def __init__(self, stage, cause):
        super().__init__(f'[{stage}] {cause}')
        self.stage = stage
        self.cause = cause
