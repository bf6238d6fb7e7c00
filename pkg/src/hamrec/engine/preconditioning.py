"""Search for constant amplitudes on labels the first-order update cannot see."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.optimize

from .. import pauli
from ..errors import ContractViolation
from .first_order import reconstruct
from .types import ReconstructionInput

DEFAULT_STEP = 2 * np.pi * 200e3


@dataclass
class PreconditioningResult:
    amplitudes: dict[str, float]
    fidelity: float
    baseline_fidelity: float
    n_evaluations: int

    @property
    def gain(self) -> float:
        return self.fidelity - self.baseline_fidelity


def optimize_preconditioning(
    inp: ReconstructionInput,
    candidate_labels: Sequence[str],
    tomography_final: np.ndarray,
    *,
    x0: Sequence[float] | None = None,
    initial_step: float = DEFAULT_STEP,
    xatol: float = 2 * np.pi * 1e3,
    fatol: float = 1e-7,
    max_evaluations: int = 400,
    **reconstruct_kwargs,
) -> PreconditioningResult:
    """Nelder-Mead over constant amplitudes maximizing mean reconstruction fidelity.

    Candidate labels must be I/Z-only.  If no point beats the unpreconditioned
    baseline the zero vector is returned with zero gain.
    """
    from ..metrics import mean_reconstruction_fidelity

    labels = tuple(candidate_labels)
    if not labels:
        raise ContractViolation("no candidate labels")
    for lab in labels:
        if not pauli.is_z_type(lab) or lab not in pauli.pauli_labels(inp.n_qubits):
            raise ContractViolation(f"{lab!r} is not an unrecoverable I/Z label")
    tomo = np.asarray(tomography_final)
    cache: dict[tuple, float] = {}

    def fidelity(x):
        key = tuple(np.round(x, 9))
        if key not in cache:
            trial = inp.with_preconditioned(dict(zip(labels, x)))
            res = reconstruct(trial, **reconstruct_kwargs)
            cache[key] = mean_reconstruction_fidelity(res, tomo).mean
        return cache[key]

    zero = np.zeros(len(labels))
    base = fidelity(zero)
    start = zero if x0 is None else np.asarray(x0, dtype=float)
    simplex = [start] + [start + initial_step * np.eye(len(labels))[k] for k in range(len(labels))]
    out = scipy.optimize.minimize(
        lambda x: -fidelity(x), start, method="Nelder-Mead",
        options={"initial_simplex": np.array(simplex), "xatol": xatol, "fatol": fatol,
                 "maxfev": max_evaluations},
    )
    best_x, best_f = out.x, -out.fun
    if best_f <= base:
        best_x, best_f = zero, base
    return PreconditioningResult(dict(zip(labels, map(float, best_x))), float(best_f), float(base), len(cache))
