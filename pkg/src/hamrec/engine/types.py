"""Inputs and outputs of the reconstruction engine."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .. import pauli
from ..errors import ContractViolation, GridMismatchError
from ..lindblad import BlochTrajectory, DissipationRates, PauliHamiltonian, _as_rates


def min_states(n_qubits: int) -> int:
    """Fewest initial states for the first-order update: ``d (d - 1) / Q``."""
    d = 2**n_qubits
    return d * (d - 1) // n_qubits


def recoverable_labels(n_qubits: int) -> tuple[str, ...]:
    """Labels visible at first order when every qubit is measured along z."""
    return tuple(lab for lab in pauli.pauli_labels(n_qubits) if not pauli.is_z_type(lab))


def z_label(qubit: int, n_qubits: int) -> str:
    return "".join("Z" if q == qubit else "I" for q in range(n_qubits))


@dataclass
class ReconstructionInput:
    """Measured z records for ``S`` initial states plus everything assumed known.

    Parameters
    ----------
    n_qubits, dt
        Register size and grid spacing (s).
    z : array (S, Q, N + 1)
        Conditioned z records of every qubit at ``t_0 .. t_N``.
    rho0 : array (S, d, d)
        Initial density matrices.
    rates : DissipationRates or one per qubit
    preconditioned : mapping label -> scalar or (N,) series
        Known amplitudes; these labels are never solved for.
    recover_labels : labels to solve for, default all first-order visible
        labels minus the preconditioned ones.
    """

    n_qubits: int
    dt: float
    z: np.ndarray
    rho0: np.ndarray
    rates: Sequence[DissipationRates] | DissipationRates | None = None
    preconditioned: Mapping[str, float | np.ndarray] = field(default_factory=dict)
    recover_labels: Sequence[str] | None = None
    normalization: float | None = None

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.rho0 = np.asarray(self.rho0, dtype=complex)
        if self.z.ndim == 2:
            self.z = self.z[:, None, :]
        if self.z.ndim != 3 or self.z.shape[1] != self.n_qubits:
            raise ContractViolation(f"z must have shape (S, {self.n_qubits}, N+1), got {self.z.shape}")
        d = 2**self.n_qubits
        if self.rho0.shape != (self.z.shape[0], d, d):
            raise GridMismatchError(f"rho0 shape {self.rho0.shape} does not match z {self.z.shape}")
        if self.z.shape[2] < 2:
            raise ContractViolation("need at least two time points")
        if self.dt <= 0:
            raise ContractViolation("dt must be positive")
        if self.n_states < min_states(self.n_qubits):
            raise ContractViolation(
                f"S = {self.n_states} initial states; at least {min_states(self.n_qubits)} required"
            )
        self.rates = _as_rates(self.rates, self.n_qubits)
        if self.normalization is None:
            self.normalization = 1.0 / d
        valid = set(pauli.pauli_labels(self.n_qubits))
        pre = {}
        for lab, val in self.preconditioned.items():
            if lab not in valid:
                raise ContractViolation(f"preconditioned label {lab!r} invalid")
            arr = np.broadcast_to(np.asarray(val, dtype=float), (self.n_steps,)).copy()
            pre[lab] = arr
        self.preconditioned = pre
        if self.recover_labels is None:
            self.recover_labels = tuple(lab for lab in recoverable_labels(self.n_qubits) if lab not in pre)
        else:
            labs = tuple(self.recover_labels)
            bad = [lab for lab in labs if lab not in valid]
            if bad:
                raise ContractViolation(f"invalid recover labels {bad}")
            # a preconditioned value wins over solving for the same label
            self.recover_labels = tuple(lab for lab in labs if lab not in pre)

    @property
    def n_states(self) -> int:
        return self.z.shape[0]

    @property
    def n_steps(self) -> int:
        return self.z.shape[2] - 1

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def preconditioned_hamiltonian(self) -> PauliHamiltonian:
        return PauliHamiltonian(self.n_qubits, self.dt, self.preconditioned, self.normalization, self.n_steps)

    def with_preconditioned(self, values: Mapping[str, float | np.ndarray]) -> "ReconstructionInput":
        """Copy with extra/overridden preconditioned amplitudes."""
        pre = dict(self.preconditioned)
        pre.update(values)
        return ReconstructionInput(
            self.n_qubits, self.dt, self.z, self.rho0, self.rates, pre,
            tuple(lab for lab in self.recover_labels if lab not in values), self.normalization,
        )


@dataclass
class Diagnostics:
    """Per-step solver health: rank, smallest singular value, residual norm."""

    rank: np.ndarray
    min_singular_value: np.ndarray
    residual: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "Diagnostics":
        return cls(np.zeros(n, dtype=int), np.full(n, np.nan), np.full(n, np.nan))


@dataclass
class ReconstructionResult:
    """Recovered amplitudes on ``t_0 .. t_{N-1}`` and engine trajectories on ``t_0 .. t_N``."""

    amplitudes: PauliHamiltonian
    states: np.ndarray  # (N + 1, S, d, d)
    diagnostics: Diagnostics
    mode: str
    recovered_labels: tuple[str, ...] = ()

    @property
    def final_states(self) -> np.ndarray:
        return self.states[-1]

    @property
    def trajectories(self) -> list[BlochTrajectory]:
        q = self.amplitudes.n_qubits
        bloch = pauli.bloch_vector(self.states, q)
        return [BlochTrajectory(q, self.amplitudes.dt, bloch[:, s]) for s in range(bloch.shape[1])]
