"""Second-order update for one qubit: recovers Omega_Z alongside Omega_X, Omega_Y.

At step ``n`` the unknowns are ``Omega_X(t_{n+1})``, ``Omega_Y(t_{n+1})`` and
``Omega_Z(t_n)``.  The forward model propagates the engine state from ``t_n``
over two bins, the first with ``(X_n, Y_n, Z_n)`` and the second with
``(X_{n+1}, Y_{n+1}, Z_n)``, and compares the predicted ``z(t_{n+2})`` with
the data.  ``model="taylor"`` swaps in the explicit second-order Taylor
residual instead of exact bin propagation.

With X, Y and Z all free the z records cannot fix Omega_Z: rotating the
frame about z by any angle that vanishes at ``t_0`` changes the transverse
amplitudes and Omega_Z together while leaving every z trace unchanged.
The Gauss-Newton Jacobian is then rank deficient and the solver raises
:class:`UnobservableZError`.  Declaring at least one transverse drive
through ``known`` (a spectroscopy drive) removes the freedom.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .. import pauli
from ..errors import ContractViolation, NoConvergenceError, UnobservableZError
from ..lindblad import _check_states, collapse_operators
from .first_order import RANK_TOL, finalize, solve_amplitudes_first_order, step_propagator
from .types import Diagnostics, ReconstructionInput, ReconstructionResult

COUPLING_TOL = 2 * np.pi * 10e3
RESIDUAL_TOL = 1e-10
MAX_ITER = 50
DEGENERACY_TOL = 1e-6
STEP_TOL = 1e-9
LABELS = ("X", "Y", "Z")


@dataclass
class SecondOrderStep:
    x_next: float
    y_next: float
    z_now: float
    residual: float
    iterations: int


def _predict_exact(rho, amps_now, amps_next, ops, dt, substeps):
    """z at t_{n+2} from density matrices (S, 2, 2) for each parameter set."""
    p1 = step_propagator(np.asarray(amps_now), ops, 1, 0.5, dt, substeps)
    p2 = step_propagator(np.asarray(amps_next), ops, 1, 0.5, dt, substeps)
    vec = rho.reshape(rho.shape[0], 4) @ (p2 @ p1).T
    r = vec.reshape(-1, 2, 2)
    return (r[:, 0, 0] - r[:, 1, 1]).real


def _predict_taylor(bloch, z_next_meas, x_now, y_now, theta, rates, dt):
    """Explicit second-order discretization evaluated with measured z(t_{n+1})."""
    xn, yn, zn = bloch[:, 0], bloch[:, 1], bloch[:, 2]
    xa, ya, zc = theta
    r = rates[0]
    g2 = r.gamma_2
    y_mid = yn + dt * (zc * xn - x_now * zn - g2 * yn)
    x_mid = xn + dt * (y_now * zn - zc * yn - g2 * xn)
    return z_next_meas + dt * (xa * y_mid - ya * x_mid) - dt * r.gamma_1 * z_next_meas + dt * r.gamma_delta


def solve_amplitudes_second_order(
    z_target: np.ndarray,
    rho_now: np.ndarray,
    amps_now: tuple[float, float],
    rates,
    dt: float,
    initial: tuple[float, float, float],
    *,
    known: Mapping[str, float] | None = None,
    model: str = "exact",
    z_next: np.ndarray | None = None,
    substeps: int = 4,
    coupling_tol: float = COUPLING_TOL,
    residual_tol: float = RESIDUAL_TOL,
    max_iter: int = MAX_ITER,
    step: int | None = None,
) -> SecondOrderStep:
    """Damped Gauss-Newton for ``(Omega_X(t_{n+1}), Omega_Y(t_{n+1}), Omega_Z(t_n))``.

    ``z_target`` is the measured ``z(t_{n+2})`` per state and ``rho_now`` the
    engine density matrices at ``t_n``.  ``known`` fixes X and/or Y at
    ``t_{n+1}`` (a declared spectroscopy drive); fixed entries are removed
    from the parameter mask.
    """
    if model not in ("exact", "taylor"):
        raise ContractViolation("model must be 'exact' or 'taylor'")
    if len(z_target) < 3:
        raise ContractViolation("second-order update needs at least 3 states")
    x_now, y_now = amps_now
    if np.hypot(x_now, y_now) < coupling_tol:
        raise UnobservableZError(
            f"step {step}: transverse drive {np.hypot(x_now, y_now):.3g} rad/s below "
            f"{coupling_tol:.3g}; z carries no information on Omega_Z", step=step)
    known = dict(known or {})
    theta = np.array(initial, dtype=float)
    for lab, val in known.items():
        theta[LABELS.index(lab)] = val
    free = np.array([lab not in known for lab in LABELS])
    ops = collapse_operators(rates, 1)
    bloch = pauli.bloch_vector(rho_now, 1)

    if model == "exact":
        def predict(th):
            return _predict_exact(rho_now, (x_now, y_now, th[2]), th, ops, dt, substeps)
    else:
        if z_next is None:
            raise ContractViolation("taylor model needs the measured z(t_{n+1})")

        def predict(th):
            return _predict_taylor(bloch, z_next, x_now, y_now, th, rates, dt)

    def residual(th):
        return np.asarray(z_target, float) - predict(th)

    r = residual(theta)
    cost = float(r @ r)
    scale = max(np.max(np.abs(theta)), 2 * np.pi * 1e6)
    for it in range(1, max_iter + 1):
        if np.sqrt(cost) < residual_tol:
            return SecondOrderStep(*theta, np.sqrt(cost), it - 1)
        h = 1e-6 * scale
        jac = np.zeros((r.size, 3))
        for k in np.flatnonzero(free):
            e = np.zeros(3)
            e[k] = h
            jac[:, k] = -(residual(theta + e) - residual(theta - e)) / (2 * h)
        jf = jac[:, free]
        sv = np.linalg.svd(jf, compute_uv=False)
        if sv[0] == 0 or sv[-1] < DEGENERACY_TOL * sv[0]:
            raise UnobservableZError(
                f"step {step}: Omega_Z is degenerate with a rotation of the free transverse "
                "amplitudes; declare the transverse drive as known", step=step)
        delta_f, *_ = np.linalg.lstsq(jf, r, rcond=None)
        delta = np.zeros(3)
        delta[free] = delta_f
        lam = 1.0
        while lam > 1e-6:
            trial = theta + lam * delta
            rt = residual(trial)
            ct = float(rt @ rt)
            if ct <= cost:
                break
            lam *= 0.5
        else:
            # no descent direction left: stationary point of the least-squares cost
            return SecondOrderStep(*theta, np.sqrt(cost), it)
        theta, r, old, cost = trial, rt, cost, ct
        if np.max(np.abs(lam * delta)) <= STEP_TOL * scale or old - cost <= 1e-12 * old:
            return SecondOrderStep(*theta, np.sqrt(cost), it)
    raise NoConvergenceError(
        f"step {step}: Gauss-Newton did not converge in {max_iter} iterations",
        step=step, residual=float(np.sqrt(cost)))


def reconstruct_second_order(
    inp: ReconstructionInput,
    *,
    known: Mapping[str, np.ndarray] | None = None,
    model: str = "exact",
    substeps: int = 4,
    coupling_tol: float = COUPLING_TOL,
    rank_tol: float = RANK_TOL,
) -> ReconstructionResult:
    """Run the second-order loop for one qubit.

    ``Omega_X, Omega_Y`` at ``t_0`` come from the first-order solve.  The last
    ``Omega_Z`` sample, which has no ``t_{N+1}`` data, repeats its predecessor.
    ``known`` maps "X"/"Y" to declared drive series that are held fixed.
    """
    if inp.n_qubits != 1:
        raise ContractViolation("second-order update is implemented for one qubit")
    if inp.n_states < 3:
        raise ContractViolation("second-order update needs S >= 3")
    if inp.n_steps < 2:
        raise ContractViolation("second-order update needs at least two steps")
    known = {lab: np.broadcast_to(np.asarray(v, float), (inp.n_steps,)) for lab, v in (known or {}).items()}
    n_steps, s_count = inp.n_steps, inp.n_states
    ops = collapse_operators(inp.rates, 1)
    amps = np.zeros((n_steps, 3))
    diag = Diagnostics.empty(n_steps)
    states = np.empty((n_steps + 1, s_count, 2, 2), dtype=complex)
    states[0] = inp.rho0
    first = solve_amplitudes_first_order(
        inp.z[:, :, 1], pauli.bloch_vector(inp.rho0, 1)[:, 2:3], pauli.bloch_vector(inp.rho0, 1),
        inp.rates, inp.dt, 1, ("X", "Y"), rank_tol=rank_tol, step=0)
    amps[0, :2] = first.amplitudes
    for lab, series in known.items():
        amps[0, LABELS.index(lab)] = series[0]
    z_prev = 0.0
    for n in range(n_steps - 1):
        rho = states[n]
        bloch = pauli.bloch_vector(rho, 1)
        guess_next = solve_amplitudes_first_order(
            inp.z[:, :, n + 1], bloch[:, 2:3], bloch, inp.rates, inp.dt, 1, ("X", "Y"),
            rank_tol=rank_tol, step=n).amplitudes
        known_n = {lab: series[n + 1] for lab, series in known.items()}
        sol = solve_amplitudes_second_order(
            inp.z[:, 0, n + 2], rho, tuple(amps[n, :2]), inp.rates, inp.dt,
            (guess_next[0], guess_next[1], z_prev), known=known_n, model=model,
            z_next=inp.z[:, 0, n + 1], substeps=substeps, coupling_tol=coupling_tol, step=n)
        amps[n + 1, 0], amps[n + 1, 1], amps[n, 2] = sol.x_next, sol.y_next, sol.z_now
        z_prev = sol.z_now
        diag.rank[n] = 3
        diag.residual[n] = sol.residual
        prop = step_propagator(amps[n], ops, 1, inp.normalization, inp.dt, substeps)
        states[n + 1] = (rho.reshape(s_count, 4) @ prop.T).reshape(s_count, 2, 2)
    amps[-1, 2] = amps[-2, 2]
    prop = step_propagator(amps[-1], ops, 1, inp.normalization, inp.dt, substeps)
    states[-1] = (states[-2].reshape(s_count, 4) @ prop.T).reshape(s_count, 2, 2)
    _check_states(states, False)
    plain = ReconstructionInput(1, inp.dt, inp.z, inp.rho0, inp.rates, {}, ("X", "Y", "Z"), inp.normalization)
    return finalize(plain, amps, ("X", "Y", "Z"), states, diag, "second_order", None, substeps)
