"""Flux-tunable coupler: tuning curves, dispersive couplings, parametric exchange.

Flux is measured in units of the flux quantum.  All frequencies are angular.
The emitted two-qubit Hamiltonians live in the frame co-rotating with both
AC-shifted qubits, with fast (double-excitation) terms dropped, and use the
``1/4`` Pauli normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, OutOfRegimeError
from .lindblad import PauliHamiltonian
from .waveforms import envelope

TWO_PI = 2 * np.pi
REGIME_LIMIT = 0.2
MAX_EPSILON = 0.2
FD_STEP = 1e-4


@dataclass(frozen=True)
class CouplerParams:
    """Coupler and qubit constants.

    The coupler defaults are illustrative, not measured: they give a full
    swap in 163 ns at a modulation depth of about 0.14 flux quanta, and a
    direct coupling that nearly cancels the static mediated one at zero flux.
    """

    omega_c0: float = TWO_PI * 6.0e9
    asymmetry: float = 0.3
    g1c: float = TWO_PI * 110e6
    g2c: float = TWO_PI * 110e6
    g12: float = TWO_PI * 18e6
    omega_q1: float = TWO_PI * 5.319e9
    omega_q2: float = TWO_PI * 5.271e9
    zeta_measured: float = TWO_PI * 28.1e3

    def __post_init__(self):
        if self.omega_c0 <= max(self.omega_q1, self.omega_q2):
            raise ContractViolation("coupler must sit above both qubits at zero flux")
        if not 0 <= self.asymmetry < 1:
            raise ContractViolation("asymmetry d must lie in [0, 1)")


@dataclass(frozen=True)
class ModulationPulse:
    """Flux modulation ``Phi(t) = Phi_DC + eps(t) cos(omega_phi t + phi)``.

    ``epsilon`` is the envelope sampled once per ``dt`` bin.  ``omega_phi``
    is metadata in the rotating frame; ``None`` means the resonant choice
    (half the AC-shifted qubit detuning).
    """

    epsilon: np.ndarray
    phi: float
    dt: float
    omega_phi: float | None = None
    phi_dc: float = 0.0

    def __post_init__(self):
        eps = np.asarray(self.epsilon, dtype=float).reshape(-1)
        if np.any(np.abs(eps) > MAX_EPSILON):
            raise ContractViolation(f"|epsilon| must stay <= {MAX_EPSILON} flux quanta")
        if self.dt <= 0:
            raise ContractViolation("dt must be positive")
        object.__setattr__(self, "epsilon", eps)

    @property
    def duration(self) -> float:
        return self.epsilon.size * self.dt


def coupler_frequency(phi_ext, p: CouplerParams):
    """``omega_c0 * (cos^2(pi Phi) + d^2 sin^2(pi Phi))**(1/4)``."""
    x = np.pi * np.asarray(phi_ext, dtype=float)
    return p.omega_c0 * (np.cos(x) ** 2 + p.asymmetry**2 * np.sin(x) ** 2) ** 0.25


def _detunings(phi_ext, p: CouplerParams):
    wc = coupler_frequency(phi_ext, p)
    deltas = (p.omega_q1 - wc, p.omega_q2 - wc)
    sums = (p.omega_q1 + wc, p.omega_q2 + wc)
    for g, dl in zip((p.g1c, p.g2c), deltas):
        ratio = np.abs(g / np.asarray(dl))
        if np.any(ratio >= REGIME_LIMIT):
            raise OutOfRegimeError(
                f"|g/Delta| = {np.max(ratio):.3g} >= {REGIME_LIMIT}; dispersive expansion invalid"
            )
    return deltas, sums


def exchange_coupling(phi_ext, p: CouplerParams, include_direct: bool = True):
    """Total transverse coupling ``J(Phi) + g12`` including counter-rotating corrections."""
    (d1, d2), (s1, s2) = _detunings(phi_ext, p)
    j = 0.5 * p.g1c * p.g2c * ((1 / d1 + 1 / d2) - (1 / s1 + 1 / s2))
    return j + p.g12 if include_direct else j


def lamb_shifted_freqs(phi_ext, p: CouplerParams):
    """Dressed qubit frequencies ``omega_q + g^2 (1/Delta - 1/Sigma)``."""
    (d1, d2), (s1, s2) = _detunings(phi_ext, p)
    w1 = p.omega_q1 + p.g1c**2 * (1 / d1 - 1 / s1)
    w2 = p.omega_q2 + p.g2c**2 * (1 / d2 - 1 / s2)
    return w1, w2


def second_derivative(f, x0: float = 0.0, h: float = FD_STEP) -> float:
    """Central second difference with one Richardson extrapolation step."""

    def d2(step):
        return (f(x0 + step) - 2 * f(x0) + f(x0 - step)) / step**2

    return float((4 * d2(h / 2) - d2(h)) / 3)


def exchange_curvature(p: CouplerParams, phi_dc: float = 0.0) -> float:
    """``d^2 J / d Phi^2`` in rad/s per flux quantum squared."""
    return second_derivative(lambda x: exchange_coupling(x, p), phi_dc)


def ac_shift_curvatures(p: CouplerParams, phi_dc: float = 0.0) -> tuple[float, float]:
    """Second flux derivatives of the two dressed qubit frequencies."""
    c1 = second_derivative(lambda x: lamb_shifted_freqs(x, p)[0], phi_dc)
    c2 = second_derivative(lambda x: lamb_shifted_freqs(x, p)[1], phi_dc)
    return c1, c2


def ac_shifts(epsilon: float, p: CouplerParams, phi_dc: float = 0.0) -> tuple[float, float]:
    """Time-averaged frequency shifts ``curvature * eps^2 / 4`` of each qubit."""
    c1, c2 = ac_shift_curvatures(p, phi_dc)
    return c1 * epsilon**2 / 4, c2 * epsilon**2 / 4


def resonant_modulation_frequency(p: CouplerParams, epsilon: float = 0.0, phi_dc: float = 0.0) -> float:
    """Half the AC-shifted qubit-qubit detuning."""
    w1, w2 = lamb_shifted_freqs(phi_dc, p)
    a1, a2 = ac_shifts(epsilon, p, phi_dc)
    return 0.5 * ((w1 + a1) - (w2 + a2))


def detuning_amplitudes(detuning_error: float, p: CouplerParams, phi_dc: float = 0.0) -> tuple[float, float]:
    """Residual ``(Omega_IZ, Omega_ZI)`` for an exchange drive off resonance by ``detuning_error``.

    The pair satisfies ``Omega_IZ - Omega_ZI = 4 * detuning_error`` and the
    split follows the relative AC-shift curvature of each qubit.
    """
    c1, c2 = ac_shift_curvatures(p, phi_dc)
    tot = abs(c1) + abs(c2)
    w1, w2 = (0.5, 0.5) if tot == 0 else (abs(c1) / tot, abs(c2) / tot)
    return 4 * detuning_error * w2, -4 * detuning_error * w1


def modulated_two_qubit_hamiltonian(
    pulse: ModulationPulse,
    p: CouplerParams,
    frame: str = "rotating",
    detuning_error: float = 0.0,
    include_zeta: bool = False,
) -> PauliHamiltonian:
    """Exchange Hamiltonian generated by second-harmonic flux modulation.

    ``Omega_XX = Omega_YY = (eps^2/4) J'' cos(2 phi)`` and
    ``Omega_XY = -Omega_YX = (eps^2/4) J'' sin(2 phi)``.  A nonzero
    ``detuning_error`` adds constant ``Omega_IZ``/``Omega_ZI`` over the pulse;
    ``include_zeta`` adds the static ``Omega_ZZ = zeta`` throughout.
    """
    if frame != "rotating":
        raise ContractViolation("only the rotating frame is supported")
    j2 = exchange_curvature(p, pulse.phi_dc)
    amp = 0.25 * pulse.epsilon**2 * j2
    c, s = np.cos(2 * pulse.phi), np.sin(2 * pulse.phi)
    amps = {"XX": amp * c, "YY": amp * c, "XY": amp * s, "YX": -amp * s}
    n = pulse.epsilon.size
    if detuning_error:
        iz, zi = detuning_amplitudes(detuning_error, p, pulse.phi_dc)
        on = (pulse.epsilon != 0).astype(float)
        amps["IZ"] = iz * on
        amps["ZI"] = zi * on
    if include_zeta:
        amps["ZZ"] = np.full(n, p.zeta_measured)
    return PauliHamiltonian(2, pulse.dt, amps, 0.25, n)


def xy_gate(beta: float, theta: float) -> np.ndarray:
    """Excitation-conserving two-qubit gate in the basis ``|00>, |01>, |10>, |11>``."""
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    u = np.eye(4, dtype=complex)
    u[1, 1] = u[2, 2] = c
    u[1, 2] = 1j * np.exp(-1j * beta) * s
    u[2, 1] = 1j * np.exp(1j * beta) * s
    return u


def xy_amplitudes(beta: float, theta_rate) -> dict[str, np.ndarray]:
    """Pauli amplitudes whose time integral ``theta`` yields ``xy_gate(beta, theta)``."""
    r = np.asarray(theta_rate, dtype=float)
    return {
        "XX": -r * np.cos(beta),
        "YY": -r * np.cos(beta),
        "XY": r * np.sin(beta),
        "YX": -r * np.sin(beta),
    }


def xy_pulse(
    beta: float,
    theta: float,
    p: CouplerParams,
    duration: float,
    dt: float,
    ramp: float = 0.0,
    phi_dc: float = 0.0,
) -> ModulationPulse:
    """Modulation pulse realizing ``XY(beta, theta)`` over ``duration``.

    ``eps(t)`` follows ``envelope`` (flat top, raised-cosine ramps), so the
    exchange amplitude follows its square.  The peak depth is scaled to the
    requested rotation angle and the modulation phase absorbs the signs of
    ``J''`` and ``theta``.
    """
    n = int(round(duration / dt))
    if n < 1:
        raise ContractViolation("pulse shorter than one bin")
    shape = envelope(n, int(round(ramp / dt)))
    j2 = exchange_curvature(p, phi_dc)
    if theta == 0:
        return ModulationPulse(np.zeros(n), 0.0, dt, phi_dc=phi_dc)
    rate_peak = abs(theta) / (np.sum(shape**2) * dt)
    eps_peak = np.sqrt(4 * rate_peak / abs(j2))
    if eps_peak > MAX_EPSILON:
        raise ContractViolation(
            f"XY({beta:.3g}, {theta:.3g}) in {duration:.3g} s needs eps = {eps_peak:.3g} > {MAX_EPSILON}"
        )
    sign = np.sign(j2) * np.sign(theta)
    phi = 0.5 * np.arctan2(sign * np.sin(beta), -sign * np.cos(beta))
    return ModulationPulse(eps_peak * shape, phi, dt, phi_dc=phi_dc)


def swap_time(pulse_epsilon: float, p: CouplerParams, phi_dc: float = 0.0) -> float:
    """Time for a full excitation swap at constant modulation depth."""
    amp = 0.25 * pulse_epsilon**2 * exchange_curvature(p, phi_dc)
    return np.pi / abs(amp)


def epsilon_for_swap_time(t_swap: float, p: CouplerParams, phi_dc: float = 0.0) -> float:
    """Constant modulation depth whose full swap takes ``t_swap``."""
    return float(np.sqrt(4 * np.pi / (t_swap * abs(exchange_curvature(p, phi_dc)))))


@dataclass
class ChevronScan:
    times: np.ndarray
    detunings: np.ndarray
    population_10: np.ndarray = field(repr=False)


def chevron(
    p: CouplerParams,
    epsilon: float,
    detunings: np.ndarray,
    times: np.ndarray,
) -> ChevronScan:
    """|10> population after a square pulse versus modulation-frequency error and length.

    A modulation-frequency error ``delta`` leaves the two single-excitation
    levels split by ``2 delta`` in the exchange frame.
    """
    g = 0.125 * epsilon**2 * abs(exchange_curvature(p))
    det = np.asarray(detunings, dtype=float)[:, None]
    t = np.asarray(times, dtype=float)[None, :]
    rabi = np.sqrt(g**2 + det**2)
    with np.errstate(invalid="ignore", divide="ignore"):
        transfer = np.where(rabi > 0, (g / rabi) ** 2 * np.sin(rabi * t) ** 2, 0.0)
    return ChevronScan(np.asarray(times, float), np.asarray(detunings, float), 1 - transfer)
