"""Hamiltonian reconstruction from continuous weak-measurement records."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ContractViolation,
    HamrecError,
    NoConvergenceError,
    SingularSystemError,
    UnobservableZError,
)
from .lindblad import BlochTrajectory, DissipationRates, PauliHamiltonian, lindblad_evolve  # noqa: E402

__all__ = [
    "BlochTrajectory",
    "ConfigError",
    "ContractViolation",
    "DissipationRates",
    "HamrecError",
    "NoConvergenceError",
    "PauliHamiltonian",
    "SingularSystemError",
    "UnobservableZError",
    "lindblad_evolve",
    "__version__",
]
