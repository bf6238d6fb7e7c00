import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hamrec.coupler import (
    CouplerParams,
    ModulationPulse,
    ac_shift_curvatures,
    chevron,
    coupler_frequency,
    detuning_amplitudes,
    epsilon_for_swap_time,
    exchange_coupling,
    exchange_curvature,
    lamb_shifted_freqs,
    modulated_two_qubit_hamiltonian,
    second_derivative,
    swap_time,
    xy_amplitudes,
    xy_gate,
    xy_pulse,
)
from hamrec.errors import ContractViolation, OutOfRegimeError
from hamrec.lindblad import PauliHamiltonian, propagate_unitary
from helpers import TWO_PI
from oracles import pauli as oracle_pauli, taylor_exp

P = CouplerParams()


def oracle_h(amps: dict, n: int) -> np.ndarray:
    return 0.25 * sum(v[n] * oracle_pauli(k) for k, v in amps.items())


def equal_up_to_phase(a, b, tol):
    k = np.argmax(np.abs(b))
    phase = a.flat[k] / b.flat[k]
    return abs(abs(phase) - 1) < tol and np.allclose(a, phase * b, atol=tol)


class TestTuning:
    def test_zero_flux(self):
        assert coupler_frequency(0.0, P) == pytest.approx(P.omega_c0, rel=1e-15)

    def test_half_flux(self):
        assert coupler_frequency(0.5, P) == pytest.approx(P.omega_c0 * np.sqrt(P.asymmetry), rel=1e-12)

    def test_periodic(self):
        assert coupler_frequency(1.0, P) == pytest.approx(P.omega_c0, rel=1e-12)

    @given(st.floats(-2, 2))
    def test_even_and_periodic(self, x):
        assert coupler_frequency(x, P) == pytest.approx(coupler_frequency(-x, P), rel=1e-12)
        assert coupler_frequency(x + 1, P) == pytest.approx(coupler_frequency(x, P), rel=1e-12)

    def test_sweet_spot(self):
        h = 1e-6
        slope = (coupler_frequency(h, P) - coupler_frequency(-h, P)) / (2 * h)
        assert abs(slope) < 1e-6 * P.omega_c0

    def test_param_validation(self):
        with pytest.raises(ContractViolation):
            CouplerParams(omega_c0=TWO_PI * 5e9)
        with pytest.raises(ContractViolation):
            CouplerParams(asymmetry=1.0)


class TestExchange:
    def test_negative_below_coupler(self):
        j = exchange_coupling(0.0, P, include_direct=False)
        d1 = P.omega_q1 - P.omega_c0
        d2 = P.omega_q2 - P.omega_c0
        s1, s2 = P.omega_q1 + P.omega_c0, P.omega_q2 + P.omega_c0
        assert j < 0
        assert j == pytest.approx(0.5 * P.g1c * P.g2c * (1 / d1 + 1 / d2 - 1 / s1 - 1 / s2), rel=1e-12)

    def test_direct_cancellation(self):
        j = exchange_coupling(0.0, P, include_direct=False)
        q = CouplerParams(g12=-j)
        assert exchange_coupling(0.0, q) == pytest.approx(0.0, abs=1e-6)

    def test_lamb_shift(self):
        w1, w2 = lamb_shifted_freqs(0.0, P)
        wc = P.omega_c0
        assert w1 - P.omega_q1 == pytest.approx(P.g1c**2 * (1 / (P.omega_q1 - wc) - 1 / (P.omega_q1 + wc)), rel=1e-9)
        assert w2 - P.omega_q2 == pytest.approx(P.g2c**2 * (1 / (P.omega_q2 - wc) - 1 / (P.omega_q2 + wc)), rel=1e-9)

    def test_out_of_regime(self):
        near = CouplerParams(omega_c0=TWO_PI * 5.4e9)
        with pytest.raises(OutOfRegimeError):
            exchange_coupling(0.0, near)

    def test_curvature_converged(self):
        f = lambda x: exchange_coupling(x, P)  # noqa: E731
        a = second_derivative(f, 0.0, 1e-4)
        b = second_derivative(f, 0.0, 5e-5)
        assert a == pytest.approx(b, rel=1e-6)

    def test_second_derivative_polynomial(self):
        assert second_derivative(lambda x: 3 * x**2 - x**4, 0.2) == pytest.approx(6 - 12 * 0.04, rel=1e-9)


def constant_pulse(eps, n, phi=0.0, dt=1e-9):
    return ModulationPulse(np.full(n, eps), phi, dt)


class TestModulatedHamiltonian:
    def test_phi_zero_pure_exchange(self):
        h = modulated_two_qubit_hamiltonian(constant_pulse(0.1, 10), P)
        assert np.allclose(h.amplitude("XY"), 0) and np.allclose(h.amplitude("YX"), 0)
        assert np.allclose(h.amplitude("XX"), h.amplitude("YY"))
        assert np.all(h.amplitude("XX") != 0)

    def test_phi_quarter_pure_xy(self):
        h = modulated_two_qubit_hamiltonian(constant_pulse(0.1, 10, np.pi / 4), P)
        assert np.allclose(h.amplitude("XX"), 0, atol=1e-9 * np.abs(h.amplitude("XY")).max())
        assert np.allclose(h.amplitude("XY"), -h.amplitude("YX"))

    @given(st.floats(-0.2, 0.2), st.floats(0, np.pi), st.floats(-1e6, 1e6))
    def test_constraints_and_conservation(self, eps, phi, det):
        h = modulated_two_qubit_hamiltonian(constant_pulse(eps, 3, phi), P, detuning_error=det, include_zeta=True)
        assert np.array_equal(h.amplitude("XX"), h.amplitude("YY"))
        assert np.array_equal(h.amplitude("XY"), -h.amplitude("YX"))
        n_op = oracle_pauli("ZI") + oracle_pauli("IZ")
        hm = oracle_h(h.amplitudes, 0)
        scale = max(1.0, np.abs(hm).max())
        assert np.abs(hm @ n_op - n_op @ hm).max() < 1e-12 * scale

    def test_quadratic_in_epsilon(self):
        a = modulated_two_qubit_hamiltonian(constant_pulse(0.05, 1), P).amplitude("XX")[0]
        b = modulated_two_qubit_hamiltonian(constant_pulse(0.1, 1), P).amplitude("XX")[0]
        assert b == pytest.approx(4 * a, rel=1e-12)

    def test_detuning_split(self):
        det = TWO_PI * 93e3
        iz, zi = detuning_amplitudes(det, P)
        assert iz - zi == pytest.approx(4 * det, rel=1e-12)
        c1, c2 = ac_shift_curvatures(P)
        assert iz / -zi == pytest.approx(abs(c2) / abs(c1), rel=1e-9)

    def test_excess_epsilon(self):
        with pytest.raises(ContractViolation):
            ModulationPulse(np.array([0.3]), 0.0, 1e-9)

    @pytest.mark.parametrize("t_swap", [163e-9, 82e-9])
    def test_swap_population(self, t_swap):
        dt = 1e-9
        n = int(round(t_swap / dt))
        eps = epsilon_for_swap_time(n * dt, P)
        h = modulated_two_qubit_hamiltonian(constant_pulse(eps, n, dt=dt), P)
        omega_ex = h.amplitude("XX")[0]
        assert swap_time(eps, P) == pytest.approx(n * dt, rel=1e-12)
        step = taylor_exp(-1j * dt * oracle_h(h.amplitudes, 0))
        psi = np.zeros(4, dtype=complex)
        psi[2] = 1.0  # |10>
        worst = 0.0
        for k in range(1, n + 1):
            psi = step @ psi
            worst = max(worst, abs(abs(psi[1]) ** 2 - np.sin(omega_ex * k * dt / 2) ** 2))
        assert worst < 1e-3
        assert abs(psi[1]) ** 2 == pytest.approx(1.0, abs=1e-3)

    def test_default_swap_depth(self):
        eps = epsilon_for_swap_time(163e-9, P)
        assert 0.1 < eps < 0.2
        assert swap_time(eps / np.sqrt(2), P) == pytest.approx(326e-9, rel=1e-9)


class TestXYGate:
    def test_identity(self):
        assert np.allclose(xy_gate(0.3, 0.0), np.eye(4))

    def test_full_swap_phase(self):
        u = xy_gate(0.0, np.pi)
        assert u[1, 2] == pytest.approx(1j) and u[2, 1] == pytest.approx(1j)
        assert abs(u[1, 1]) < 1e-15 and u[0, 0] == 1 and u[3, 3] == 1

    @given(st.floats(0, np.pi - 1e-6), st.floats(0, 2 * np.pi - 1e-6))
    def test_unitary(self, beta, theta):
        u = xy_gate(beta, theta)
        assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-12)

    @pytest.mark.parametrize("beta,theta", [(0.0, -np.pi / 2), (np.pi / 2, np.pi / 2), (0.0, np.pi), (1.1, 2.3)])
    def test_matches_propagator(self, beta, theta):
        n, dt = 50, 2e-9
        amps = xy_amplitudes(beta, np.full(n, theta / (n * dt)))
        u = propagate_unitary(PauliHamiltonian(2, dt, amps, 0.25))
        assert equal_up_to_phase(u, xy_gate(beta, theta), 1e-8)

    @pytest.mark.parametrize("beta,theta", [(0.0, -np.pi / 2), (np.pi / 2, np.pi / 2), (0.0, np.pi)])
    def test_pulse_realizes_gate(self, beta, theta):
        pulse = xy_pulse(beta, theta, P, 248e-9, 4e-9, ramp=40e-9)
        h = modulated_two_qubit_hamiltonian(pulse, P)
        assert equal_up_to_phase(propagate_unitary(h), xy_gate(beta, theta), 1e-8)

    def test_pulse_too_short(self):
        with pytest.raises(ContractViolation):
            xy_pulse(0.0, np.pi, P, 8e-9, 4e-9)


def test_chevron_resonant_column():
    eps = epsilon_for_swap_time(163e-9, P)
    times = np.linspace(0, 326e-9, 41)
    scan = chevron(P, eps, np.array([0.0, TWO_PI * 5e6]), times)
    g = np.pi / (2 * 163e-9)
    assert np.allclose(scan.population_10[0], np.cos(g * times) ** 2, atol=1e-12)
    assert scan.population_10[1].min() > 0.1
