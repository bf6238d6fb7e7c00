"""Synthetic dispersive-readout records.

The resonator field is driven at the midpoint between the two qubit-state
dependent resonator frequencies.  Two response models are provided:

``adiabatic``
    ``Re a(t) = -(2 Omega_wm / kappa)(chi / kappa) z(t - tau)`` with
    ``tau = 2 / kappa`` and a constant imaginary part ``-2 Omega_wm / kappa``.
``ode``
    RK4 integration of ``da/dt = -(kappa/2)(i (chi/kappa) z(t) + 1) a - i Omega_wm``
    with the qubit operator replaced by its ensemble average ``z(t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class ReadoutParams:
    """Resonator and measurement-chain constants for one qubit.

    Frequencies are angular (rad/s).  ``noise_sigma`` is the per-shot,
    per-sample standard deviation of ``Re a`` and is a free configuration
    constant.
    """

    kappa: float
    chi: float
    omega_wm: float
    nbar: float = 0.0
    eta: float = 1.0
    sample_rate: float = 1e9
    noise_sigma: float = 0.0
    gamma_d: float = 0.0

    def __post_init__(self):
        if self.kappa <= 0:
            raise ContractViolation("kappa must be positive")
        if abs(self.chi / self.kappa) >= 0.2:
            raise ContractViolation("|chi/kappa| must be < 0.2 for the dispersive model")
        if not 0 < self.eta <= 1:
            raise ContractViolation("eta must lie in (0, 1]")
        if self.sample_rate <= 0 or self.noise_sigma < 0 or self.gamma_d < 0 or self.nbar < 0:
            raise ContractViolation("sample_rate > 0 and noise_sigma, gamma_d, nbar >= 0 required")

    @classmethod
    def from_photons(cls, kappa: float, chi: float, nbar: float, **kw) -> "ReadoutParams":
        """Choose ``omega_wm`` so the steady field holds ``nbar`` photons at z = 0."""
        return cls(kappa=kappa, chi=chi, omega_wm=0.5 * kappa * np.sqrt(nbar), nbar=nbar, **kw)

    @property
    def tau(self) -> float:
        """Resonator delay ``2 / kappa``."""
        return 2.0 / self.kappa

    @property
    def signal_scale(self) -> float:
        """``(2 Omega_wm / kappa)(chi / kappa)``; Re a = -scale * z in the adiabatic model."""
        return 2.0 * self.omega_wm / self.kappa * self.chi / self.kappa


@dataclass
class MeasurementRecord:
    """Ensemble-averaged voltage record of one readout channel.

    ``t0`` is the time of the first sample on the qubit clock, in seconds.
    ``calibration`` holds the ``(v_at_z_plus1, v_at_z_minus1)`` voltages used for
    rescaling, when known.
    """

    sample_rate: float
    samples: np.ndarray
    n_shots_averaged: int = 1
    delay_applied: float = 0.0
    calibration: tuple[float, float] | None = None
    t0: float = 0.0
    shots: np.ndarray | None = field(default=None, repr=False)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate

    def with_calibration(self, v_plus: float, v_minus: float) -> "MeasurementRecord":
        return MeasurementRecord(
            self.sample_rate, self.samples, self.n_shots_averaged, self.delay_applied,
            (float(v_plus), float(v_minus)), self.t0, self.shots,
        )


def measurement_dephasing(p: ReadoutParams) -> float:
    """The calibrated measurement-induced dephasing rate carried by ``p``."""
    return p.gamma_d


def dephasing_from_photons(nbar: float, coefficient: float) -> float:
    """Proportional model ``Gamma_d = coefficient * nbar``."""
    if nbar < 0 or coefficient < 0:
        raise ContractViolation("nbar and coefficient must be non-negative")
    return coefficient * nbar


def shot_noise_sigma(p: ReadoutParams) -> float:
    """Per-shot, per-sample std of ``Re a`` for homodyne detection with efficiency eta.

    A sample integrated over ``1 / sample_rate`` carries variance
    ``1 / (4 eta kappa delta_t)`` in units of the intracavity field.
    """
    return 0.5 / np.sqrt(p.eta * p.kappa / p.sample_rate)


def steady_state_field(z: float | np.ndarray, p: ReadoutParams) -> np.ndarray:
    """Fixed point ``a* = -i Omega_wm / ((kappa/2)(1 + i chi z / kappa))``."""
    z = np.asarray(z, dtype=float)
    return -1j * p.omega_wm / (0.5 * p.kappa * (1 + 1j * p.chi * z / p.kappa))


def resonator_response_adiabatic(z: np.ndarray, p: ReadoutParams) -> np.ndarray:
    """Delayed linear response; ``z`` is sampled at ``p.sample_rate`` from t = 0.

    The delay is applied by linear interpolation; times before the first
    sample see ``z[0]`` (steady state before the record).
    """
    z = np.asarray(z, dtype=float)
    t = np.arange(z.size) / p.sample_rate
    delayed = np.interp(t - p.tau, t, z, left=z[0], right=z[-1])
    return -p.signal_scale * delayed - 1j * 2.0 * p.omega_wm / p.kappa


def resonator_response_ode(z: np.ndarray, p: ReadoutParams, substeps: int = 2) -> np.ndarray:
    """Integrate the semiclassical field equation with RK4.

    ``z`` is linearly interpolated between samples for the intermediate RK4
    stages.  The field starts in the steady state for ``z[0]``.
    """
    z = np.asarray(z, dtype=float)
    if z.size < 2:
        return steady_state_field(z, p).astype(complex)
    h = 1.0 / (p.sample_rate * substeps)
    half_k = 0.5 * p.kappa
    r = p.chi / p.kappa

    def deriv(a, zz):
        return -half_k * (1j * r * zz + 1.0) * a - 1j * p.omega_wm

    out = np.empty(z.size, dtype=complex)
    a = complex(steady_state_field(z[0], p))
    out[0] = a
    for k in range(z.size - 1):
        z0, z1 = z[k], z[k + 1]
        for s in range(substeps):
            f0 = s / substeps
            f1 = (s + 0.5) / substeps
            f2 = (s + 1) / substeps
            za = z0 + f0 * (z1 - z0)
            zm = z0 + f1 * (z1 - z0)
            zb = z0 + f2 * (z1 - z0)
            k1 = deriv(a, za)
            k2 = deriv(a + 0.5 * h * k1, zm)
            k3 = deriv(a + 0.5 * h * k2, zm)
            k4 = deriv(a + h * k3, zb)
            a = a + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = a
    return out


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        return np.random.SeedSequence(0)
    if isinstance(seed, (list, tuple)):
        return np.random.SeedSequence([int(s) for s in seed])
    return np.random.SeedSequence(int(seed))


MAX_RETAINED_SHOTS = 1000


def synthesize_shots(
    field_: np.ndarray,
    p: ReadoutParams,
    n_shots: int,
    seed=0,
    *,
    per_shot: bool = False,
    retain_shots: int = 0,
    t0: float = 0.0,
) -> MeasurementRecord:
    """Ensemble-averaged noisy record of ``Re a``.

    By default the average of ``n_shots`` white-noise records is drawn
    directly as one Gaussian with std ``noise_sigma / sqrt(n_shots)``.
    ``per_shot=True`` instead draws every shot from its own stream
    ``(seed..., shot_index)`` and averages with pairwise summation; this is the
    reference path and the only one that can retain shots (up to 1000).
    """
    if n_shots < 1:
        raise ContractViolation("n_shots must be >= 1")
    signal = np.real(np.asarray(field_))
    ss = _as_seed_sequence(seed)
    shots = None
    if p.noise_sigma == 0:
        samples = signal.copy()
    elif per_shot or retain_shots:
        keep = min(retain_shots, MAX_RETAINED_SHOTS, n_shots)
        base = list(ss.entropy) if isinstance(ss.entropy, (list, tuple)) else [ss.entropy]
        base += list(ss.spawn_key)
        noise = np.empty((n_shots, signal.size))
        for k in range(n_shots):
            rng = np.random.default_rng(np.random.SeedSequence(base + [k]))
            noise[k] = rng.normal(0.0, p.noise_sigma, signal.size)
        samples = signal + np.sum(noise, axis=0) / n_shots
        if keep:
            shots = signal + noise[:keep]
    else:
        rng = np.random.default_rng(ss)
        samples = signal + rng.normal(0.0, p.noise_sigma / np.sqrt(n_shots), signal.size)
    return MeasurementRecord(
        sample_rate=p.sample_rate,
        samples=samples,
        n_shots_averaged=n_shots,
        delay_applied=p.tau,
        t0=t0,
        shots=shots,
    )


def respond(z: np.ndarray, p: ReadoutParams, model: str = "adiabatic") -> np.ndarray:
    if model == "adiabatic":
        return resonator_response_adiabatic(z, p)
    if model == "ode":
        return resonator_response_ode(z, p)
    raise ContractViolation(f"unknown readout model {model!r}")


def calibration_traces(
    p: ReadoutParams,
    duration: float,
    n_shots: int = 1,
    seed=0,
    model: str = "adiabatic",
) -> tuple[MeasurementRecord, MeasurementRecord]:
    """Records with the qubit parked at z = +1 and z = -1 (no drive)."""
    n = max(int(round(duration * p.sample_rate)), 1)
    ss = _as_seed_sequence(seed)
    s_plus, s_minus = ss.spawn(2)
    out = []
    for zval, s in ((1.0, s_plus), (-1.0, s_minus)):
        a = respond(np.full(n, zval), p, model)
        out.append(synthesize_shots(a, p, n_shots, s))
    return out[0], out[1]


def calibration_levels(plus: MeasurementRecord, minus: MeasurementRecord) -> tuple[float, float]:
    """Mean voltages of the two calibration records."""
    return float(np.mean(plus.samples)), float(np.mean(minus.samples))
