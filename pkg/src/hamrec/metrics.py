"""Fidelity measures for reconstructed states and Hamiltonians."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, GridMismatchError, InvalidStateError
from .lindblad import PauliHamiltonian, propagate_unitaries

CLAMP_TOL = 1e-9
PSD_TOL = 1e-7


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    herm = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(herm)
    if w.min() < -PSD_TOL:
        raise InvalidStateError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3g})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def state_fidelity(rho_rec: np.ndarray, rho_tomo: np.ndarray) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Evaluated as the squared trace norm of ``sqrt(rho) sqrt(sigma)``, which
    is the same quantity but keeps the round-off of near-zero eigenvalues
    second order (pure-state overlaps come out to ~1e-15).
    """
    rho_rec = np.asarray(rho_rec, dtype=complex)
    rho_tomo = np.asarray(rho_tomo, dtype=complex)
    if rho_rec.shape != rho_tomo.shape or rho_rec.shape[0] != rho_rec.shape[1]:
        raise ContractViolation(f"shape mismatch {rho_rec.shape} vs {rho_tomo.shape}")
    sv = np.linalg.svd(_psd_sqrt(rho_rec) @ _psd_sqrt(rho_tomo), compute_uv=False)
    return min(float(np.sum(sv) ** 2), 1.0)


@dataclass(frozen=True)
class FidelityTrace:
    """Fidelity sampled at ``t_n = n * dt``."""

    dt: float
    values: np.ndarray
    kind: str

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.dt


def haar_average_fidelity(u_c: np.ndarray, u_r: np.ndarray) -> np.ndarray:
    """Closed-form Haar average of ``|<psi|U_c^dag U_r|psi>|^2``; batched over leading axes."""
    d = u_c.shape[-1]
    tr = np.einsum("...ji,...ji->...", u_c.conj(), u_r)
    return (d + np.abs(tr) ** 2) / (d * (d + 1))


def haar_states(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` Haar-random pure states of dimension ``d``."""
    psi = rng.normal(size=(n, d)) + 1j * rng.normal(size=(n, d))
    return psi / np.linalg.norm(psi, axis=1, keepdims=True)


def haar_fidelity_monte_carlo(u_c: np.ndarray, u_r: np.ndarray, n_samples: int = 100_000, seed=0) -> float:
    """Sample estimate of the same average, used to validate the closed form."""
    rng = np.random.default_rng(seed)
    psi = haar_states(n_samples, u_c.shape[0], rng)
    w = u_c.conj().T @ u_r
    amp = np.einsum("ni,ij,nj->n", psi.conj(), w, psi)
    return float(np.mean(np.abs(amp) ** 2))


def dynamical_coherent_fidelity(h_r: PauliHamiltonian, h_c: PauliHamiltonian) -> FidelityTrace:
    """Haar-averaged agreement of the unitaries generated by two Hamiltonians, per step."""
    if (
        h_r.n_qubits != h_c.n_qubits
        or h_r.n_steps != h_c.n_steps
        or not np.isclose(h_r.dt, h_c.dt, rtol=1e-12)
    ):
        raise GridMismatchError("Hamiltonians are on different grids")
    u_r = propagate_unitaries(h_r)
    u_c = propagate_unitaries(h_c)
    return FidelityTrace(h_r.dt, haar_average_fidelity(u_c, u_r), "dynamical_coherent")


@dataclass(frozen=True)
class ReconstructionFidelity:
    per_state: np.ndarray
    mean: float


def mean_reconstruction_fidelity(result_or_states, tomo_final) -> ReconstructionFidelity:
    """Uhlmann fidelity of each engine final state against its tomography."""
    finals = getattr(result_or_states, "final_states", result_or_states)
    finals = np.asarray(finals)
    tomo = np.asarray(tomo_final)
    if finals.shape != tomo.shape:
        raise ContractViolation(f"{finals.shape[0]} engine states vs {tomo.shape[0]} tomography states")
    per = np.array([state_fidelity(a, b) for a, b in zip(finals, tomo)])
    return ReconstructionFidelity(per, float(np.mean(per)))
