"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations

import numpy as np


class HamrecError(Exception):
    """Base class for all toolkit errors."""


class ContractViolation(HamrecError, ValueError):
    """An input violated a documented precondition."""


class InvalidSpecError(ContractViolation):
    """A filter or pulse specification is not realizable."""


class InvalidStateError(ContractViolation):
    """A matrix passed as a density matrix is not positive semidefinite."""


class GridMismatchError(ContractViolation):
    """Two time series live on incompatible grids."""


class OutOfRegimeError(ContractViolation):
    """Coupler parameters fall outside the dispersive expansion's validity."""


class UnscaledOutputError(ContractViolation):
    """A record was conditioned without calibration voltages."""


class IntegrationFailure(HamrecError, RuntimeError):
    """The master-equation integrator lost trace beyond tolerance."""


class SingularSystemError(HamrecError, np.linalg.LinAlgError):
    """The stacked design matrix is rank deficient at some step.

    Attributes
    ----------
    step : int or None
        Time index at which the solve failed.
    singular_values : ndarray
        Full singular spectrum of the offending matrix.
    """

    def __init__(self, message: str, step: int | None = None, singular_values=None):
        super().__init__(message)
        self.step = step
        self.singular_values = (
            np.asarray(singular_values) if singular_values is not None else np.array([])
        )


class UnobservableZError(HamrecError, RuntimeError):
    """No transverse drive couples z to the Z amplitude at this step."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class NoConvergenceError(HamrecError, RuntimeError):
    """The nonlinear second-order solve did not reach its residual target."""

    def __init__(self, message: str, step: int | None = None, residual: float = float("nan")):
        super().__init__(message)
        self.step = step
        self.residual = residual


class ConfigError(HamrecError, ValueError):
    """A scenario configuration failed validation.

    The ``field`` attribute holds the dotted path of the offending entry.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
