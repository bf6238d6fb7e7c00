"""Hamiltonian reconstruction algorithms."""

from .fast_slow import reconstruct_fast_slow
from .first_order import (
    build_design_matrix,
    dissipative_drift,
    reconstruct,
    solve_amplitudes_first_order,
)
from .preconditioning import PreconditioningResult, optimize_preconditioning
from .second_order import reconstruct_second_order, solve_amplitudes_second_order
from .types import (
    Diagnostics,
    ReconstructionInput,
    ReconstructionResult,
    min_states,
    recoverable_labels,
)

__all__ = [
    "Diagnostics",
    "PreconditioningResult",
    "ReconstructionInput",
    "ReconstructionResult",
    "build_design_matrix",
    "dissipative_drift",
    "min_states",
    "optimize_preconditioning",
    "reconstruct",
    "reconstruct_fast_slow",
    "reconstruct_second_order",
    "recoverable_labels",
    "solve_amplitudes_first_order",
    "solve_amplitudes_second_order",
]
