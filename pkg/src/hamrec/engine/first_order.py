"""First-order pseudoinverse update and the solve/integrate loop."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .. import pauli
from ..conditioning import FilterSpec, butterworth_sos, filter_apply
from ..errors import ContractViolation, SingularSystemError
from ..lindblad import (
    PauliHamiltonian,
    _check_states,
    collapse_operators,
    evolve_density,
    liouvillian,
    rk4_propagator,
)
from .types import Diagnostics, ReconstructionInput, ReconstructionResult, recoverable_labels, z_label

RANK_TOL = 1e-6
INCREMENT_MODES = ("tracking", "measured")


def default_measured(n_qubits: int) -> tuple[str, ...]:
    return tuple(z_label(q, n_qubits) for q in range(n_qubits))


@lru_cache(maxsize=None)
def _commutator_table(labels: tuple[str, ...], measured: tuple[str, ...], n_qubits: int):
    """``(coef, index)`` arrays with ``i[P, O] = coef * R`` and ``index`` of R (or -1)."""
    all_labels = pauli.pauli_labels(n_qubits)
    coef = np.zeros((len(measured), len(labels)))
    index = np.full((len(measured), len(labels)), -1, dtype=int)
    for m, o in enumerate(measured):
        for j, p in enumerate(labels):
            c, r = pauli.commutator_coefficient(p, o)
            if r is not None:
                coef[m, j] = c
                index[m, j] = all_labels.index(r)
    return coef, index


def build_design_matrix(
    states: np.ndarray,
    recover_labels: Sequence[str],
    n_qubits: int,
    measured: Sequence[str] | None = None,
    normalization: float | None = None,
) -> np.ndarray:
    """Stacked first-order coefficient matrix.

    ``states`` holds Pauli expectations, shape ``(S, 4**Q - 1)``.  Row
    ``s * M + m`` gives the coefficients of each recovered amplitude in
    ``d<O_m>/dt`` for state ``s``, i.e. ``norm * <i[P, O_m]>``.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    measured = default_measured(n_qubits) if measured is None else tuple(measured)
    norm = 1.0 / 2**n_qubits if normalization is None else normalization
    coef, index = _commutator_table(tuple(recover_labels), measured, n_qubits)
    padded = np.concatenate([states, np.zeros((states.shape[0], 1))], axis=1)
    # index -1 picks the zero pad column
    blocks = norm * coef[None] * padded[:, index]
    return blocks.reshape(-1, len(recover_labels))


@lru_cache(maxsize=None)
def _drift_table(rates_key, n_qubits: int, measured: tuple[str, ...]) -> np.ndarray:
    from ..lindblad import DissipationRates

    rates = [DissipationRates(*r) for r in rates_key]
    ops = collapse_operators(rates, n_qubits)
    paulis = np.array([pauli.pauli_operator(lab) for lab in pauli.pauli_labels(n_qubits, True)])
    d = 2**n_qubits
    table = np.zeros((len(measured), len(paulis)))
    for m, o in enumerate(measured):
        op = pauli.pauli_operator(o)
        gen = sum((pauli.dissipator_adjoint(L, op) for L in ops), np.zeros((d, d), dtype=complex))
        table[m] = np.einsum("ij,kji->k", gen, paulis).real / d
    return table


def _rates_key(rates) -> tuple:
    return tuple((r.gamma_down, r.gamma_up, r.gamma_phi, r.gamma_d) for r in rates)


def dissipative_drift(
    states: np.ndarray, rates, n_qubits: int, measured: Sequence[str] | None = None
) -> np.ndarray:
    """``<sum_L D^dag[L](O_m)>`` for each state, shape (S, M)."""
    from ..lindblad import _as_rates

    measured = default_measured(n_qubits) if measured is None else tuple(measured)
    table = _drift_table(_rates_key(_as_rates(rates, n_qubits)), n_qubits, measured)
    states = np.atleast_2d(np.asarray(states, dtype=float))
    return table[:, 0][None] + states @ table[:, 1:].T


@dataclass
class StepSolution:
    amplitudes: np.ndarray
    rank: int
    min_singular_value: float
    residual: float


def svd_solve(m: np.ndarray, rhs: np.ndarray, rank_tol: float = RANK_TOL, step: int | None = None):
    """Least squares through the SVD; rank deficiency raises instead of truncating."""
    n_cols = m.shape[1]
    if n_cols == 0:
        return np.zeros(0), np.zeros(0)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size < n_cols or s[0] == 0 or s[-1] < rank_tol * s[0]:
        raise SingularSystemError(
            f"design matrix rank deficient at step {step}: singular values {s}",
            step=step, singular_values=s,
        )
    return vt.T @ ((u.T @ rhs) / s), s


def solve_amplitudes_first_order(
    z_next: np.ndarray,
    z_now: np.ndarray,
    states: np.ndarray,
    rates,
    dt: float,
    n_qubits: int = 1,
    recover_labels: Sequence[str] | None = None,
    preconditioned: Mapping[str, float] | None = None,
    *,
    measured: Sequence[str] | None = None,
    normalization: float | None = None,
    rank_tol: float = RANK_TOL,
    step: int | None = None,
) -> StepSolution:
    """Solve ``z_next - z_now = dt (M Omega + M_pre Omega_pre + drift)`` for Omega.

    ``z_next`` and ``z_now`` have shape (S, M); ``states`` (S, 4**Q - 1)
    holds the full Pauli expectations at ``t_n``.
    """
    labels = recoverable_labels(n_qubits) if recover_labels is None else tuple(recover_labels)
    pre = dict(preconditioned or {})
    labels = tuple(lab for lab in labels if lab not in pre)
    if any(pauli.is_z_type(lab) for lab in labels):
        raise ContractViolation("first-order mode cannot recover I/Z-only labels")
    m = build_design_matrix(states, labels, n_qubits, measured, normalization)
    rhs = (np.asarray(z_next, float) - np.asarray(z_now, float)) / dt
    rhs = rhs - dissipative_drift(states, rates, n_qubits, measured)
    rhs = rhs.reshape(-1)
    if pre:
        pre_labels = tuple(pre)
        m_pre = build_design_matrix(states, pre_labels, n_qubits, measured, normalization)
        rhs = rhs - m_pre @ np.array([pre[lab] for lab in pre_labels])
    x, s = svd_solve(m, rhs, rank_tol, step)
    res = float(np.linalg.norm(m @ x - rhs) * dt) if x.size else float(np.linalg.norm(rhs) * dt)
    return StepSolution(x, len(labels), float(s[-1]) if s.size else np.nan, res)


def full_vector(labels: Sequence[str], values: np.ndarray, n_qubits: int, extra: Mapping[str, float] = ()) -> np.ndarray:
    all_labels = pauli.pauli_labels(n_qubits)
    vec = np.zeros(len(all_labels))
    for lab, v in zip(labels, values):
        vec[all_labels.index(lab)] += v
    for lab, v in dict(extra).items():
        vec[all_labels.index(lab)] += v
    return vec


def step_propagator(vec: np.ndarray, ops, n_qubits: int, normalization: float, dt: float, substeps: int = 4):
    """RK4 transfer matrix for one bin with amplitude vector ``vec``."""
    h = normalization * np.einsum("k,kij->ij", vec, pauli.pauli_stack(n_qubits))
    return rk4_propagator(liouvillian(h, ops), dt, substeps)


def apply_output_filter(ham: PauliHamiltonian, labels: Sequence[str], spec: FilterSpec) -> PauliHamiltonian:
    """Zero-phase (or causal, per ``spec.phase_mode``) low-pass of the listed amplitude series."""
    fs = 1.0 / ham.dt
    coeffs = butterworth_sos(spec, fs)
    amps = dict(ham.amplitudes)
    for lab in labels:
        amps[lab] = filter_apply(ham.amplitude(lab), coeffs, spec.phase_mode)
    return PauliHamiltonian(ham.n_qubits, ham.dt, amps, ham.normalization, ham.n_steps)


def finalize(
    inp: ReconstructionInput,
    omega: np.ndarray,
    labels: tuple[str, ...],
    states: np.ndarray,
    diag: Diagnostics,
    mode: str,
    output_filter: FilterSpec | None,
    substeps: int,
    extra: Mapping[str, np.ndarray] | None = None,
) -> ReconstructionResult:
    amps = {lab: omega[:, j] for j, lab in enumerate(labels)}
    for src in (inp.preconditioned, extra or {}):
        for lab, series in src.items():
            amps[lab] = amps.get(lab, 0.0) + series
    ham = PauliHamiltonian(inp.n_qubits, inp.dt, amps, inp.normalization, inp.n_steps)
    if output_filter is not None:
        ham = apply_output_filter(ham, labels, output_filter)
        states = evolve_density(inp.rho0, ham, inp.rates, substeps)
    return ReconstructionResult(ham, states, diag, mode, labels)


def reconstruct(
    inp: ReconstructionInput,
    mode: str = "first_order",
    *,
    increment: str = "tracking",
    output_filter: FilterSpec | None = None,
    substeps: int = 4,
    rank_tol: float = RANK_TOL,
    **kwargs,
) -> ReconstructionResult:
    """Alternate first-order solves with one-bin master-equation integration.

    ``increment="tracking"`` forms each increment as ``z_meas(t_{n+1}) -
    z_engine(t_n)``, which keeps the engine's own z locked to the data;
    ``"measured"`` uses ``z_meas(t_{n+1}) - z_meas(t_n)``, the plain
    finite-difference update.  ``mode`` may also be ``"second_order"`` or
    ``"fast_slow"``, which dispatch to the dedicated solvers.
    """
    if mode == "second_order":
        from .second_order import reconstruct_second_order

        return reconstruct_second_order(inp, substeps=substeps, **kwargs)
    if mode == "fast_slow":
        from .fast_slow import reconstruct_fast_slow

        return reconstruct_fast_slow(inp, kwargs.pop("guess", None), increment=increment,
                                     output_filter=output_filter, substeps=substeps, rank_tol=rank_tol)
    if mode != "first_order":
        raise ContractViolation(f"unknown reconstruction mode {mode!r}")
    if increment not in INCREMENT_MODES:
        raise ContractViolation(f"increment must be one of {INCREMENT_MODES}")
    q, n_steps, s_count, d = inp.n_qubits, inp.n_steps, inp.n_states, inp.dim
    labels = tuple(inp.recover_labels)
    if any(pauli.is_z_type(lab) for lab in labels):
        raise ContractViolation("first-order mode cannot recover I/Z-only labels; precondition them")
    ops = collapse_operators(inp.rates, q)
    z_idx = [pauli.pauli_labels(q).index(z_label(k, q)) for k in range(q)]
    omega = np.zeros((n_steps, len(labels)))
    diag = Diagnostics.empty(n_steps)
    states = np.empty((n_steps + 1, s_count, d, d), dtype=complex)
    states[0] = inp.rho0
    vec = inp.rho0.reshape(s_count, d * d)
    for n in range(n_steps):
        bloch = pauli.bloch_vector(states[n], q)
        z_now = bloch[:, z_idx] if increment == "tracking" else inp.z[:, :, n]
        pre = {lab: series[n] for lab, series in inp.preconditioned.items()}
        sol = solve_amplitudes_first_order(
            inp.z[:, :, n + 1], z_now, bloch, inp.rates, inp.dt, q, labels, pre,
            normalization=inp.normalization, rank_tol=rank_tol, step=n,
        )
        omega[n] = sol.amplitudes
        diag.rank[n], diag.min_singular_value[n], diag.residual[n] = (
            sol.rank, sol.min_singular_value, sol.residual)
        prop = step_propagator(full_vector(labels, sol.amplitudes, q, pre), ops, q,
                               inp.normalization, inp.dt, substeps)
        vec = vec @ prop.T
        states[n + 1] = vec.reshape(s_count, d, d)
    _check_states(states, False)
    return finalize(inp, omega, labels, states, diag, "first_order", output_filter, substeps)
