"""Synthetic experiments: ground-truth evolution, readout records, tomography.

The truth is propagated with ``scipy.linalg.expm`` of the Liouvillian on
every zero-order-hold segment, independently of the RK4 integrator used by
the reconstruction engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from . import pauli
from .conditioning import FilterSpec, condition_record
from .errors import ContractViolation
from .lindblad import PauliHamiltonian, _liouvillians, collapse_operators
from .readout import (
    MeasurementRecord,
    ReadoutParams,
    calibration_levels,
    calibration_traces,
    respond,
    synthesize_shots,
)

PRE_BUFFER = 40e-9
POST_BUFFER = 40e-9
CALIBRATION_DURATION = 1e-6


def two_axis_states(n_qubits: int) -> tuple[str, ...]:
    """Product states over ``{+X, +Y, +Z, -Z}`` per qubit (4**Q labels)."""
    singles = ("+X", "+Y", "+Z", "-Z")
    labels = [""]
    for _ in range(n_qubits):
        labels = [f"{a},{b}" if a else b for a in labels for b in singles]
    return tuple(labels)


def initial_states(labels: Sequence[str]) -> np.ndarray:
    return np.array([pauli.density_matrix(lab) for lab in labels])


def oracle_evolve(rho0: np.ndarray, ham: PauliHamiltonian, rates=None, refine: int = 1) -> np.ndarray:
    """Exact ZOH evolution sampled ``refine`` times per bin.

    Returns shape ``(N * refine + 1, S, d, d)``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 2:
        rho0 = rho0[None]
    d = ham.dim
    ops = collapse_operators(rates, ham.n_qubits)
    lvs = _liouvillians(ham.matrices(), ops) if ham.n_steps else np.zeros((0, d * d, d * d))
    h = ham.dt / refine
    out = np.empty((ham.n_steps * refine + 1, rho0.shape[0], d, d), dtype=complex)
    out[0] = rho0
    vec = rho0.reshape(rho0.shape[0], d * d)
    k = 1
    for lv in lvs:
        prop_t = scipy.linalg.expm(h * lv).T
        for _ in range(refine):
            vec = vec @ prop_t
            out[k] = vec.reshape(rho0.shape)
            k += 1
    return out


def tomography(rho0: np.ndarray, ham: PauliHamiltonian, rates=None) -> np.ndarray:
    """Final density matrices at ``t_N`` from the exact oracle."""
    return oracle_evolve(rho0, ham, rates)[-1]


def z_expectations(rhos: np.ndarray, n_qubits: int) -> np.ndarray:
    """``<Z_q>`` for each qubit; output has the qubit axis last."""
    zs = np.array([pauli.embed(pauli.Z, q, n_qubits) for q in range(n_qubits)])
    return np.einsum("...ij,qji->...q", rhos, zs).real


@dataclass
class SyntheticDataset:
    """Everything a reconstruction run consumes, plus the truth for scoring.

    ``z_true`` and ``z_measured`` both have shape ``(S, Q, N + 1)``.
    """

    truth: PauliHamiltonian
    state_labels: tuple[str, ...]
    rho0: np.ndarray
    rates: object
    z_true: np.ndarray
    z_measured: np.ndarray
    tomography_final: np.ndarray
    records: dict = field(default_factory=dict, repr=False)


def _padded(ham: PauliHamiltonian, post_bins: int):
    """Fine-grid Hamiltonian: ``ham`` followed by ``post_bins`` idle bins."""
    amps = {lab: np.concatenate([s, np.zeros(post_bins)]) for lab, s in ham.amplitudes.items()}
    return PauliHamiltonian(ham.n_qubits, ham.dt, amps, ham.normalization, ham.n_steps + post_bins)


def simulate_dataset(
    truth: PauliHamiltonian,
    state_labels: Sequence[str],
    rates,
    readout: Sequence[ReadoutParams] | ReadoutParams,
    *,
    n_shots: int = 1,
    seed: int = 0,
    filter_spec: FilterSpec | None = FilterSpec(),
    readout_model: str = "adiabatic",
    shift_mode: str = "interpolate",
    noiseless: bool = False,
    keep_records: bool = False,
    taus: Sequence[float] | None = None,
) -> SyntheticDataset:
    """Simulate z records for every initial state and qubit.

    The qubit is evolved on the readout sample clock, with ``PRE_BUFFER`` of
    idle preparation before ``t = 0`` (z held at its initial value) and
    ``POST_BUFFER + tau`` of free evolution after the pulse so the delayed
    signal covers the whole grid.  Records are calibrated from parked
    ``z = +-1`` traces, then filtered, decimated, shifted and rescaled.
    ``taus`` overrides the shift applied per qubit (default ``2 / kappa``).
    """
    q = truth.n_qubits
    reads = [readout] * q if isinstance(readout, ReadoutParams) else list(readout)
    if len(reads) != q:
        raise ContractViolation(f"need {q} readout parameter sets, got {len(reads)}")
    fs = reads[0].sample_rate
    if any(r.sample_rate != fs for r in reads):
        raise ContractViolation("all readout channels must share one sample rate")
    refine = int(round(truth.dt * fs))
    if refine < 1 or abs(refine - truth.dt * fs) > 1e-9 * refine:
        raise ContractViolation("dt must be a whole number of readout samples")
    shifts = [r.tau for r in reads] if taus is None else [float(t) for t in taus]
    if len(shifts) != q:
        raise ContractViolation(f"need {q} delay values, got {len(shifts)}")
    if noiseless:
        reads = [ReadoutParams(**{**r.__dict__, "noise_sigma": 0.0}) for r in reads]

    labels = tuple(state_labels)
    rho0 = initial_states(labels)
    n = truth.n_steps
    tail = POST_BUFFER + max(max(r.tau for r in reads), max(shifts))
    post_bins = int(np.ceil(tail / truth.dt))
    fine = oracle_evolve(rho0, _padded(truth, post_bins), rates, refine)
    z_fine = z_expectations(fine, q)  # (T, S, Q)
    grid = fine[::refine][: n + 1]
    z_true = np.moveaxis(z_expectations(grid, q), 0, -1)  # (S, Q, N+1)
    tomo = grid[-1].copy()

    pre = int(round(PRE_BUFFER * fs))
    t0 = -pre / fs
    z_meas = np.empty_like(z_true)
    records = {}
    root = np.random.SeedSequence(int(seed))
    cal_seeds = root.spawn(q)
    for qi, rp in enumerate(reads):
        plus, minus = calibration_traces(rp, CALIBRATION_DURATION, n_shots, cal_seeds[qi], readout_model)
        cal = calibration_levels(plus, minus)
        for s in range(len(labels)):
            zs = z_fine[:, s, qi]
            trace = np.concatenate([np.full(pre, zs[0]), zs])
            field_ = respond(trace, rp, readout_model)
            rec = synthesize_shots(field_, rp, n_shots, [int(seed), s, qi, 1], t0=t0)
            rec = rec.with_calibration(*cal)
            z_meas[s, qi] = condition_record(
                rec, filter_spec, truth.dt, shifts[qi], n_out=n + 1, shift_mode=shift_mode
            )
            if keep_records:
                records[(s, qi)] = rec
    return SyntheticDataset(truth, labels, rho0, rates, z_true, z_meas, tomo, records)


def record_from_z(z: np.ndarray, p: ReadoutParams, n_shots: int = 1, seed=0, model: str = "adiabatic") -> MeasurementRecord:
    """Single-channel helper: a record of ``z`` sampled at ``p.sample_rate``."""
    return synthesize_shots(respond(np.asarray(z, dtype=float), p, model), p, n_shots, seed)
