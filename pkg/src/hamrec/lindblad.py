"""Time-dependent Pauli Hamiltonians and Lindblad propagation.

Amplitudes are stored in rad/s with ``H/hbar = norm * sum_P Omega_P(t) P`` and
``norm = 1 / 2**Q`` by default, so one qubit reads ``(1/2) Omega . sigma`` and
two qubits read ``(1/4) sum Omega_ab sigma_a sigma_b``.  Amplitudes are held
constant over each ``dt`` bin.

The dissipator per qubit is

* ``(gamma_d + gamma_phi) / 2 * D[Z]``  (coherences decay at gamma_d + gamma_phi),
* ``gamma_down * D[sigma_-]`` and ``gamma_up * D[sigma_+]``,

which gives ``dz/dt = -Gamma_1 z + Gamma_Delta`` and transverse decay
``Gamma_2 = gamma_d + gamma_phi + Gamma_1 / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import pauli
from .errors import ContractViolation, GridMismatchError, IntegrationFailure

TRACE_TOL = 1e-6


@dataclass(frozen=True)
class DissipationRates:
    """Per-qubit dissipation rates in 1/s."""

    gamma_down: float = 0.0
    gamma_up: float = 0.0
    gamma_phi: float = 0.0
    gamma_d: float = 0.0

    def __post_init__(self):
        for name in ("gamma_down", "gamma_up", "gamma_phi", "gamma_d"):
            if getattr(self, name) < 0:
                raise ContractViolation(f"{name} must be >= 0")

    @property
    def gamma_1(self) -> float:
        return self.gamma_down + self.gamma_up

    @property
    def gamma_delta(self) -> float:
        return self.gamma_down - self.gamma_up

    @property
    def gamma_2(self) -> float:
        return self.gamma_d + self.gamma_phi + 0.5 * self.gamma_1

    @classmethod
    def from_times(cls, t1: float, t2_ramsey: float, gamma_d: float = 0.0, gamma_up: float = 0.0):
        """Build rates from T1 and an empty-cavity Ramsey T2."""
        g1 = 1.0 / t1
        gphi = max(1.0 / t2_ramsey - 0.5 * g1, 0.0)
        return cls(gamma_down=g1 - gamma_up, gamma_up=gamma_up, gamma_phi=gphi, gamma_d=gamma_d)


def _as_rates(rates, n_qubits: int) -> list[DissipationRates]:
    if rates is None:
        return [DissipationRates()] * n_qubits
    if isinstance(rates, DissipationRates):
        return [rates] * n_qubits
    rates = list(rates)
    if len(rates) != n_qubits:
        raise ContractViolation(f"need {n_qubits} rate sets, got {len(rates)}")
    return rates


def collapse_operators(rates, n_qubits: int) -> list[np.ndarray]:
    """Scaled jump operators ``sqrt(rate) * L`` for every nonzero channel."""
    ops = []
    for q, r in enumerate(_as_rates(rates, n_qubits)):
        deph = 0.5 * (r.gamma_d + r.gamma_phi)
        if deph > 0:
            ops.append(np.sqrt(deph) * pauli.embed(pauli.Z, q, n_qubits))
        if r.gamma_down > 0:
            ops.append(np.sqrt(r.gamma_down) * pauli.embed(pauli.SIGMA_MINUS, q, n_qubits))
        if r.gamma_up > 0:
            ops.append(np.sqrt(r.gamma_up) * pauli.embed(pauli.SIGMA_PLUS, q, n_qubits))
    return ops


@dataclass(frozen=True)
class PauliHamiltonian:
    """Piecewise-constant amplitudes over the non-identity Pauli basis.

    Parameters
    ----------
    n_qubits : int
    dt : float
        Bin width in seconds.
    amplitudes : mapping of label -> array of shape (N,)
        Missing labels are zero.
    normalization : float, optional
        Prefactor in front of the Pauli sum; defaults to ``1 / 2**n_qubits``.
    """

    n_qubits: int
    dt: float
    amplitudes: Mapping[str, np.ndarray]
    normalization: float | None = None
    n_steps: int = field(default=-1)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ContractViolation("n_qubits must be >= 1")
        if self.dt <= 0:
            raise ContractViolation("dt must be positive")
        valid = set(pauli.pauli_labels(self.n_qubits))
        amps = {}
        lengths = set()
        for lab, series in self.amplitudes.items():
            if lab not in valid:
                raise ContractViolation(f"label {lab!r} invalid for {self.n_qubits} qubits")
            arr = np.array(series, dtype=float).reshape(-1)
            arr.setflags(write=False)
            amps[lab] = arr
            lengths.add(arr.size)
        if len(lengths) > 1:
            raise GridMismatchError(f"amplitude series lengths differ: {sorted(lengths)}")
        n = lengths.pop() if lengths else self.n_steps
        if n < 0:
            raise ContractViolation("cannot infer n_steps from empty amplitudes")
        if self.n_steps >= 0 and self.n_steps != n:
            raise GridMismatchError(f"n_steps={self.n_steps} but series have length {n}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "n_steps", n)
        if self.normalization is None:
            object.__setattr__(self, "normalization", 1.0 / 2**self.n_qubits)

    @classmethod
    def zeros(cls, n_qubits: int, dt: float, n_steps: int, normalization=None):
        return cls(n_qubits, dt, {}, normalization, n_steps)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def labels(self) -> tuple[str, ...]:
        return pauli.pauli_labels(self.n_qubits)

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt

    def amplitude(self, label: str) -> np.ndarray:
        if label in self.amplitudes:
            return self.amplitudes[label]
        if label not in self.labels:
            raise ContractViolation(f"label {label!r} invalid for {self.n_qubits} qubits")
        return np.zeros(self.n_steps)

    def as_array(self, labels: Sequence[str] | None = None) -> np.ndarray:
        """Amplitude table of shape (N, len(labels))."""
        labels = self.labels if labels is None else labels
        return np.stack([self.amplitude(lab) for lab in labels], axis=-1) if labels else np.zeros(
            (self.n_steps, 0)
        )

    def matrices(self) -> np.ndarray:
        """H/hbar at every step, shape (N, d, d), in rad/s."""
        table = self.as_array()
        return self.normalization * np.einsum("nk,kij->nij", table, pauli.pauli_stack(self.n_qubits))

    def _check_compatible(self, other: "PauliHamiltonian"):
        if (
            other.n_qubits != self.n_qubits
            or other.n_steps != self.n_steps
            or not np.isclose(other.dt, self.dt, rtol=1e-12)
            or not np.isclose(other.normalization, self.normalization)
        ):
            raise GridMismatchError("Hamiltonians live on different grids or conventions")

    def __add__(self, other: "PauliHamiltonian") -> "PauliHamiltonian":
        self._check_compatible(other)
        amps = {lab: np.array(s) for lab, s in self.amplitudes.items()}
        for lab, s in other.amplitudes.items():
            amps[lab] = amps.get(lab, 0.0) + s
        return PauliHamiltonian(self.n_qubits, self.dt, amps, self.normalization, self.n_steps)

    def __sub__(self, other: "PauliHamiltonian") -> "PauliHamiltonian":
        self._check_compatible(other)
        neg = {lab: -s for lab, s in other.amplitudes.items()}
        return self + PauliHamiltonian(self.n_qubits, self.dt, neg, self.normalization, self.n_steps)

    def truncated(self, n_steps: int) -> "PauliHamiltonian":
        amps = {lab: s[:n_steps] for lab, s in self.amplitudes.items()}
        return PauliHamiltonian(self.n_qubits, self.dt, amps, self.normalization, min(n_steps, self.n_steps))

    def filtered_labels(self, keep) -> "PauliHamiltonian":
        amps = {lab: s for lab, s in self.amplitudes.items() if lab in set(keep)}
        return PauliHamiltonian(self.n_qubits, self.dt, amps, self.normalization, self.n_steps)


@dataclass(frozen=True)
class BlochTrajectory:
    """Pauli expectation values sampled at ``t_n = n * dt``, ``n = 0..N``.

    ``values`` has shape ``(N + 1, 4**Q - 1)`` with columns in
    :func:`pauli.pauli_labels` order.
    """

    n_qubits: int
    dt: float
    values: np.ndarray

    @property
    def labels(self) -> tuple[str, ...]:
        return pauli.pauli_labels(self.n_qubits)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.shape[0]) * self.dt

    def __getitem__(self, label: str) -> np.ndarray:
        return self.values[:, self.labels.index(label)]

    def z(self, qubit: int = 0) -> np.ndarray:
        lab = "".join("Z" if q == qubit else "I" for q in range(self.n_qubits))
        return self[lab]

    def bloch_norm(self, qubit: int = 0) -> np.ndarray:
        comps = []
        for letter in "XYZ":
            lab = "".join(letter if q == qubit else "I" for q in range(self.n_qubits))
            comps.append(self[lab])
        return np.sqrt(np.sum(np.square(comps), axis=0))


def liouvillian(h: np.ndarray, collapse_ops: Sequence[np.ndarray]) -> np.ndarray:
    """Superoperator acting on row-major ``vec(rho)``.

    ``vec(A rho B) = (A kron B^T) vec(rho)``.
    """
    d = h.shape[-1]
    eye = np.eye(d)
    out = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for L in collapse_ops:
        LdL = L.conj().T @ L
        out += np.kron(L, L.conj()) - 0.5 * (np.kron(LdL, eye) + np.kron(eye, LdL.T))
    return out


def _liouvillians(hs: np.ndarray, collapse_ops) -> np.ndarray:
    """Batched :func:`liouvillian` over a stack of Hamiltonians (N, d, d)."""
    d = hs.shape[-1]
    eye = np.eye(d)
    diss = np.zeros((d * d, d * d), dtype=complex)
    for L in collapse_ops:
        LdL = L.conj().T @ L
        diss += np.kron(L, L.conj()) - 0.5 * (np.kron(LdL, eye) + np.kron(eye, LdL.T))
    left = np.einsum("nij,kl->nikjl", hs, eye).reshape(-1, d * d, d * d)
    right = np.einsum("ij,nlk->nikjl", eye, hs).reshape(-1, d * d, d * d)
    return -1j * (left - right) + diss


def rk4_propagator(lv: np.ndarray, dt: float, substeps: int = 4) -> np.ndarray:
    """Transfer matrix of ``substeps`` classical RK4 steps for ``dv/dt = lv v``.

    For a linear autonomous system one RK4 step is exactly the degree-4 Taylor
    polynomial of ``exp(h lv)``.  Leading axes of ``lv`` are a batch.
    """
    if substeps < 1:
        raise ContractViolation("substeps must be >= 1")
    h = dt / substeps
    n = lv.shape[-1]
    a = h * lv
    eye = np.broadcast_to(np.eye(n), a.shape)
    a2 = a @ a
    a3 = a2 @ a
    step = eye + a + a2 / 2 + a3 / 6 + (a3 @ a) / 24
    return np.linalg.matrix_power(step, substeps) if step.ndim == 2 else _batched_power(step, substeps)


def _batched_power(m: np.ndarray, k: int) -> np.ndarray:
    out = None
    base = m
    while k:
        if k & 1:
            out = base if out is None else out @ base
        k >>= 1
        if k:
            base = base @ base
    return out


def evolve_density(
    rho0: np.ndarray,
    ham: PauliHamiltonian,
    rates=None,
    substeps: int = 4,
    check_positivity: bool = False,
) -> np.ndarray:
    """Integrate a stack of density matrices; returns shape ``(N + 1, *rho0.shape)``."""
    rho0 = np.asarray(rho0, dtype=complex)
    single = rho0.ndim == 2
    rhos = rho0[None] if single else rho0
    d = ham.dim
    if rhos.shape[-2:] != (d, d):
        raise ContractViolation(f"rho0 has shape {rho0.shape}, Hamiltonian dim is {d}")
    ops = collapse_operators(rates, ham.n_qubits)
    props = rk4_propagator(_liouvillians(ham.matrices(), ops), ham.dt, substeps) if ham.n_steps else []
    out = np.empty((ham.n_steps + 1, *rhos.shape), dtype=complex)
    out[0] = rhos
    vec = rhos.reshape(rhos.shape[0], d * d)
    for n in range(ham.n_steps):
        vec = vec @ props[n].T
        out[n + 1] = vec.reshape(rhos.shape)
    _check_states(out, check_positivity)
    return out[:, 0] if single else out


def _check_states(rhos: np.ndarray, check_positivity: bool):
    tr = np.trace(rhos, axis1=-2, axis2=-1)
    drift = np.max(np.abs(tr - 1))
    if not np.isfinite(drift) or drift > TRACE_TOL:
        raise IntegrationFailure(f"trace drift {drift:.3g} exceeds {TRACE_TOL}; dt too coarse")
    if check_positivity:
        herm = 0.5 * (rhos + np.swapaxes(rhos.conj(), -1, -2))
        emin = np.min(np.linalg.eigvalsh(herm))
        if emin < -1e-7:
            raise IntegrationFailure(f"density matrix lost positivity (eigenvalue {emin:.3g})")


def lindblad_evolve(
    rho0: np.ndarray,
    ham: PauliHamiltonian,
    rates=None,
    substeps: int = 4,
    check_positivity: bool = False,
) -> tuple[BlochTrajectory, np.ndarray]:
    """Integrate the master equation with fixed-step RK4.

    Parameters
    ----------
    rho0 : (d, d) array
        Initial density matrix.
    ham : PauliHamiltonian
    rates : DissipationRates or sequence of them, one per qubit
    substeps : int
        RK4 steps per ``ham.dt`` bin.

    Returns
    -------
    trajectory : BlochTrajectory
        Expectation values at ``t_0 .. t_N``.
    final : (d, d) array
        Density matrix at ``t_N``.
    """
    rhos = evolve_density(rho0, ham, rates, substeps, check_positivity)
    traj = BlochTrajectory(ham.n_qubits, ham.dt, pauli.bloch_vector(rhos, ham.n_qubits))
    return traj, rhos[-1]


def step_unitaries(ham: PauliHamiltonian) -> np.ndarray:
    """Per-bin propagators ``exp(-i H(t_n) dt)``, shape (N, d, d)."""
    return pauli.matrix_exp(-1j * ham.dt * ham.matrices())


def propagate_unitaries(ham: PauliHamiltonian) -> np.ndarray:
    """Time-ordered products ``U(t_n)`` for ``n = 0..N``; ``U(t_0) = I``."""
    steps = step_unitaries(ham) if ham.n_steps else np.zeros((0, ham.dim, ham.dim))
    out = np.empty((ham.n_steps + 1, ham.dim, ham.dim), dtype=complex)
    out[0] = np.eye(ham.dim)
    for n in range(ham.n_steps):
        out[n + 1] = steps[n] @ out[n]
    return out


def propagate_unitary(ham: PauliHamiltonian, up_to_step: int | None = None) -> np.ndarray:
    """``T exp(-i int_0^{t_k} H dt')`` with ``k = up_to_step`` (default: all steps)."""
    k = ham.n_steps if up_to_step is None else up_to_step
    if not 0 <= k <= ham.n_steps:
        raise ContractViolation(f"up_to_step={k} outside 0..{ham.n_steps}")
    return propagate_unitaries(ham.truncated(k))[-1]


def pauli_generator(h: np.ndarray, collapse_ops, n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Heisenberg generator in the Pauli basis: ``d b / dt = A b + c``."""
    d = 2**n_qubits
    paulis = pauli.pauli_stack(n_qubits)
    lv = liouvillian(h, collapse_ops)

    def act(op):
        return (lv @ op.reshape(-1)).reshape(d, d)

    c = np.einsum("ij,kji->k", act(np.eye(d) / d), paulis).real
    a = np.empty((len(paulis), len(paulis)))
    for j, p in enumerate(paulis):
        a[:, j] = np.einsum("ij,kji->k", act(p / d), paulis).real
    return a, c


def heisenberg_step_predict(
    expectations: np.ndarray,
    amplitudes: Mapping[str, float] | np.ndarray,
    rates=None,
    n_qubits: int = 1,
    dt: float = 1e-9,
    normalization: float | None = None,
) -> np.ndarray:
    """First-order (Euler) prediction of all Pauli expectations one step ahead.

    ``expectations`` has shape ``(..., 4**Q - 1)``; ``amplitudes`` is either a
    label mapping or a full vector in :func:`pauli.pauli_labels` order.
    """
    labels = pauli.pauli_labels(n_qubits)
    if isinstance(amplitudes, Mapping):
        vec = np.array([amplitudes.get(lab, 0.0) for lab in labels], dtype=float)
    else:
        vec = np.asarray(amplitudes, dtype=float)
    norm = 1.0 / 2**n_qubits if normalization is None else normalization
    h = norm * np.einsum("k,kij->ij", vec, pauli.pauli_stack(n_qubits))
    a, c = pauli_generator(h, collapse_operators(rates, n_qubits), n_qubits)
    b = np.asarray(expectations, dtype=float)
    return b + dt * (b @ a.T + c)
