import numpy as np

from hamrec.lindblad import DissipationRates
from hamrec.synth import initial_states, oracle_evolve, z_expectations

TWO_PI = 2 * np.pi
CARDINAL = ("+X", "-X", "+Y", "-Y", "+Z", "-Z")
# qubit 1 device constants
T1_Q1, T2_Q1 = 61e-6, 60e-6
GAMMA_D = 1 / 3e-6


def table_rates():
    return DissipationRates.from_times(T1_Q1, T2_Q1, GAMMA_D)


def oracle_z(ham, labels, rates=None):
    """Exact ZOH z records, shape (S, Q, N + 1), plus the initial states."""
    rho0 = initial_states(labels)
    z = np.moveaxis(z_expectations(oracle_evolve(rho0, ham, rates), ham.n_qubits), 0, -1)
    return z, rho0


def rms(a):
    return float(np.sqrt(np.mean(np.square(a))))
