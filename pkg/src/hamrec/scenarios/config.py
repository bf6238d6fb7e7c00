"""Scenario configuration: nested dataclasses loaded from JSON.

Units are SI.  Keys ending in ``_hz`` are ordinary frequencies and are
multiplied by 2*pi on use; times are seconds, rates are 1/s.
"""

from __future__ import annotations

import dataclasses
import json
import types
import typing
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .. import pauli
from ..coupler import CouplerParams, xy_amplitudes, xy_pulse, modulated_two_qubit_hamiltonian
from ..conditioning import FilterSpec
from ..engine.first_order import INCREMENT_MODES
from ..engine.types import min_states, recoverable_labels
from ..errors import ConfigError, HamrecError
from ..lindblad import DissipationRates, PauliHamiltonian
from ..readout import ReadoutParams, shot_noise_sigma
from ..waveforms import flat_top_cosine, sine_wave, steps_for

TWO_PI = 2 * np.pi
TAU_WARN_FRACTION = 0.2
KINDS = ("reconstruction", "sweep", "chevron")
MODES = ("first_order", "second_order", "fast_slow")
SHAPES = ("flat_top", "sine", "constant")


@dataclass
class QubitConfig:
    t1: float = 61e-6
    t2_ramsey: float = 60e-6
    gamma_up: float = 0.0


@dataclass
class ReadoutConfig:
    """One readout channel.  ``noise_sigma=None`` uses the quantum-limited value."""

    kappa_hz: float = 11.78e6
    chi_hz: float = 0.64e6
    nbar: float = 0.94
    eta: float = 0.41
    gamma_d: float = 1 / 3e-6
    noise_sigma: Optional[float] = None
    sample_rate: float = 1e9
    tau: Optional[float] = None

    def params(self, noiseless: bool = False) -> ReadoutParams:
        base = ReadoutParams.from_photons(
            TWO_PI * self.kappa_hz, TWO_PI * self.chi_hz, self.nbar,
            eta=self.eta, sample_rate=self.sample_rate, gamma_d=self.gamma_d,
        )
        sigma = 0.0 if noiseless else (shot_noise_sigma(base) if self.noise_sigma is None else self.noise_sigma)
        return dataclasses.replace(base, noise_sigma=sigma)

    def resolved_tau(self) -> float:
        return 2.0 / (TWO_PI * self.kappa_hz) if self.tau is None else self.tau


@dataclass
class CouplerConfig:
    omega_c0_hz: float = 6.0e9
    asymmetry: float = 0.3
    g1c_hz: float = 110e6
    g2c_hz: float = 110e6
    g12_hz: float = 18e6
    omega_q1_hz: float = 5.319e9
    omega_q2_hz: float = 5.271e9
    zeta_hz: float = 28.1e3

    def params(self) -> CouplerParams:
        return CouplerParams(
            omega_c0=TWO_PI * self.omega_c0_hz, asymmetry=self.asymmetry,
            g1c=TWO_PI * self.g1c_hz, g2c=TWO_PI * self.g2c_hz, g12=TWO_PI * self.g12_hz,
            omega_q1=TWO_PI * self.omega_q1_hz, omega_q2=TWO_PI * self.omega_q2_hz,
            zeta_measured=TWO_PI * self.zeta_hz,
        )


@dataclass
class DeviceConfig:
    qubits: list[QubitConfig] = field(default_factory=lambda: [QubitConfig()])
    readout: list[ReadoutConfig] = field(default_factory=lambda: [ReadoutConfig()])
    coupler: Optional[CouplerConfig] = None

    def rates(self) -> list[DissipationRates]:
        return [
            DissipationRates.from_times(q.t1, q.t2_ramsey, gamma_d=r.gamma_d, gamma_up=q.gamma_up)
            for q, r in zip(self.qubits, self.readout)
        ]


@dataclass
class WaveformConfig:
    """One Pauli amplitude series.

    ``flat_top`` uses ``area`` (integral of the amplitude, rad) and ``ramp``;
    ``sine`` and ``constant`` use ``amplitude_hz``.  Components with
    ``reference=false`` are left out of the control Hamiltonian, so they play
    the part of an unintended error.
    """

    label: str = "X"
    shape: str = "flat_top"
    area: float = float(np.pi)
    ramp: float = 50e-9
    amplitude_hz: float = 0.0
    period: float = 250e-9
    phase: float = 0.0
    reference: bool = True

    def series(self, n: int, dt: float) -> np.ndarray:
        if self.shape == "flat_top":
            return flat_top_cosine(n, dt, self.area, self.ramp)
        if self.shape == "sine":
            return sine_wave(n, dt, TWO_PI * self.amplitude_hz, self.period, self.phase)
        return np.full(n, TWO_PI * self.amplitude_hz)


@dataclass
class CouplerPulseConfig:
    """Parametric exchange pulse realizing XY(beta, theta)."""

    beta: float = 0.0
    theta: float = float(np.pi)
    ramp: float = 50e-9
    detuning_error_hz: float = 0.0
    include_zeta: bool = False
    phi_dc: float = 0.0


@dataclass
class TruthConfig:
    duration: float = 250e-9
    components: list[WaveformConfig] = field(default_factory=list)
    coupler_pulse: Optional[CouplerPulseConfig] = None


@dataclass
class PipelineConfig:
    target_dt: float = 2e-9
    filter_enabled: bool = True
    filter_order: int = 3
    critical_freq: float = 50e6
    phase_mode: str = "zero_phase"
    readout_model: str = "adiabatic"
    shift_mode: str = "interpolate"

    def filter_spec(self) -> Optional[FilterSpec]:
        if not self.filter_enabled:
            return None
        return FilterSpec(self.filter_order, self.critical_freq, self.phase_mode)


@dataclass
class PreconditioningConfig:
    """``fixed_hz`` are known constants; ``optimize`` labels are fitted against tomography."""

    fixed_hz: dict[str, float] = field(default_factory=dict)
    optimize: list[str] = field(default_factory=list)
    x0_hz: dict[str, float] = field(default_factory=dict)
    max_evaluations: int = 400


@dataclass
class ReconstructionConfig:
    mode: str = "first_order"
    recover_labels: Optional[list[str]] = None
    increment: str = "tracking"
    output_filter: bool = False
    output_filter_order: int = 5
    output_filter_freq: float = 50e6
    known_hz: dict[str, float] = field(default_factory=dict)
    second_order_model: str = "exact"
    preconditioning: PreconditioningConfig = field(default_factory=PreconditioningConfig)

    def output_filter_spec(self) -> Optional[FilterSpec]:
        return FilterSpec(self.output_filter_order, self.output_filter_freq) if self.output_filter else None


@dataclass
class SweepConfig:
    """Repeat the scenario with ``parameter`` set to each value."""

    parameter: str = "duration"
    values: list[float] = field(default_factory=list)
    ramp_fraction: float = 0.2
    include_truth_z: bool = True


@dataclass
class ChevronConfig:
    swap_time: float = 163e-9
    detuning_span_hz: float = 4e6
    n_detunings: int = 41
    max_time: float = 500e-9
    n_times: int = 126


@dataclass
class Scenario:
    name: str
    description: str = ""
    kind: str = "reconstruction"
    n_qubits: int = 1
    device: DeviceConfig = field(default_factory=DeviceConfig)
    truth: TruthConfig = field(default_factory=TruthConfig)
    initial_states: list[str] = field(default_factory=lambda: ["+X", "+Y", "+Z", "-Z"])
    shots: int = 1
    seed: int = 0
    noiseless: bool = False
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    reconstruction: ReconstructionConfig = field(default_factory=ReconstructionConfig)
    sweep: Optional[SweepConfig] = None
    chevron: Optional[ChevronConfig] = None

    # -- derived objects -------------------------------------------------

    @property
    def dt(self) -> float:
        return self.pipeline.target_dt

    def n_steps(self, duration: float | None = None) -> int:
        return steps_for(self.truth.duration if duration is None else duration, self.dt)

    def readout_params(self) -> list[ReadoutParams]:
        return [r.params(self.noiseless) for r in self.device.readout]

    def effective_shots(self) -> int:
        return 1 if self.noiseless else self.shots

    def hamiltonians(self, duration: float | None = None, ramp_fraction: float | None = None):
        """``(truth, reference)`` on the reconstruction grid."""
        n = self.n_steps(duration)
        dt = self.dt
        truth: dict[str, np.ndarray] = {}
        ref: dict[str, np.ndarray] = {}
        for comp in self.truth.components:
            if ramp_fraction is not None and comp.shape == "flat_top":
                comp = dataclasses.replace(comp, ramp=ramp_fraction * n * dt)
            s = comp.series(n, dt)
            truth[comp.label] = truth.get(comp.label, 0.0) + s
            if comp.reference:
                ref[comp.label] = ref.get(comp.label, 0.0) + s
        cp = self.truth.coupler_pulse
        if cp is not None:
            params = self.device.coupler.params()
            pulse = xy_pulse(cp.beta, cp.theta, params, n * dt, dt, cp.ramp, cp.phi_dc)
            h = modulated_two_qubit_hamiltonian(
                pulse, params, detuning_error=TWO_PI * cp.detuning_error_hz, include_zeta=cp.include_zeta
            )
            for lab, s in h.amplitudes.items():
                truth[lab] = truth.get(lab, 0.0) + s
            rate = np.abs(h.amplitude("XX") + 1j * h.amplitude("XY"))
            for lab, s in xy_amplitudes(cp.beta, np.sign(cp.theta) * rate).items():
                ref[lab] = ref.get(lab, 0.0) + s
        q = self.n_qubits
        return (PauliHamiltonian(q, dt, truth, n_steps=n), PauliHamiltonian(q, dt, ref, n_steps=n))

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict, source: str = "") -> "Scenario":
        sc = _build(cls, data, source or "scenario")
        validate(sc)
        return sc

    @classmethod
    def from_json(cls, text: str, source: str = "<string>") -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}", exc.msg) from None
        if not isinstance(data, dict):
            raise ConfigError(source, "top level must be an object")
        return cls.from_dict(data, "")

    @classmethod
    def load(cls, path) -> "Scenario":
        path = Path(path)
        return cls.from_json(path.read_text(), str(path))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def with_overrides(self, *, seed=None, shots=None, noiseless=None) -> "Scenario":
        sc = dataclasses.replace(self)
        if seed is not None:
            sc.seed = int(seed)
        if shots is not None:
            sc.shots = int(shots)
        if noiseless:
            sc.noiseless = True
        validate(sc)
        return sc


# -- generic loader ----------------------------------------------------------


def _unwrap_optional(tp):
    origin = typing.get_origin(tp)
    if origin in (Union, types.UnionType):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if len(args) == 1:
            return args[0], True
    return tp, False


def _coerce(tp, value, path: str):
    tp, optional = _unwrap_optional(tp)
    if value is None:
        if optional:
            return None
        raise ConfigError(path, "may not be null")
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(path, "expected an object")
        return _build(tp, value, path)
    origin = typing.get_origin(tp)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list")
        (item,) = typing.get_args(tp)
        return [_coerce(item, v, f"{path}[{i}]") for i, v in enumerate(value)]
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(path, "expected an object")
        _, vt = typing.get_args(tp)
        return {str(k): _coerce(vt, v, f"{path}.{k}") for k, v in value.items()}
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, "expected true or false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, "expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, "expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        return value
    return value


def _build(cls, data: dict, path: str):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}", "unknown key")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = _coerce(hints[f.name], data[f.name], f"{path}.{f.name}")
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"{path}.{f.name}", "required key missing")
    return cls(**kwargs)


# -- validation ----------------------------------------------------------------


def _check(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(path, message)


def validate(sc: Scenario) -> list[str]:
    """Raise :class:`ConfigError` on the first bad field; return warnings."""
    notes: list[str] = []
    q = sc.n_qubits
    _check(sc.name != "", "name", "must be non-empty")
    _check(sc.kind in KINDS, "kind", f"must be one of {KINDS}")
    _check(q in (1, 2), "n_qubits", "must be 1 or 2")
    _check(len(sc.device.qubits) == q, "device.qubits", f"need exactly {q} entries")
    _check(len(sc.device.readout) == q, "device.readout", f"need exactly {q} entries")
    for i, qc in enumerate(sc.device.qubits):
        _check(qc.t1 > 0 and qc.t2_ramsey > 0, f"device.qubits[{i}]", "t1 and t2_ramsey must be positive")
        _check(qc.t2_ramsey <= 2 * qc.t1, f"device.qubits[{i}].t2_ramsey", "must not exceed 2 * t1")
    for i, rc in enumerate(sc.device.readout):
        p = f"device.readout[{i}]"
        try:
            rc.params()
        except HamrecError as exc:
            raise ConfigError(p, str(exc)) from None
        ref = 2.0 / (TWO_PI * rc.kappa_hz)
        tau = rc.resolved_tau()
        if abs(tau - ref) > TAU_WARN_FRACTION * ref:
            msg = f"{p}.tau = {tau:.3g} s deviates more than 20% from 2/kappa = {ref:.3g} s"
            warnings.warn(msg, stacklevel=2)
            notes.append(msg)
    _check(sc.shots >= 1, "shots", "must be >= 1")
    _check(sc.seed >= 0, "seed", "must be >= 0")
    pl = sc.pipeline
    _check(pl.target_dt > 0, "pipeline.target_dt", "must be positive")
    _check(pl.readout_model in ("adiabatic", "ode"), "pipeline.readout_model", "must be adiabatic or ode")
    _check(pl.shift_mode in ("interpolate", "nearest"), "pipeline.shift_mode", "must be interpolate or nearest")
    for i, rc in enumerate(sc.device.readout):
        ratio = rc.sample_rate * pl.target_dt
        _check(abs(ratio - round(ratio)) < 1e-9 and round(ratio) >= 1, "pipeline.target_dt",
               f"must be a whole number of samples of readout[{i}]")
    if pl.filter_enabled:
        try:
            pl.filter_spec()
        except HamrecError as exc:
            raise ConfigError("pipeline", str(exc)) from None
        _check(pl.critical_freq < 0.5 * sc.device.readout[0].sample_rate, "pipeline.critical_freq",
               "must be below Nyquist")

    if sc.kind == "chevron":
        _check(sc.device.coupler is not None, "device.coupler", "chevron scan needs a coupler")
        _check(sc.chevron is not None, "chevron", "required for kind 'chevron'")
        return notes

    try:
        sc.n_steps()
    except HamrecError as exc:
        raise ConfigError("truth.duration", str(exc)) from None
    valid = set(pauli.pauli_labels(q))
    for i, comp in enumerate(sc.truth.components):
        p = f"truth.components[{i}]"
        _check(comp.label in valid, f"{p}.label", f"not a {q}-qubit Pauli label")
        _check(comp.shape in SHAPES, f"{p}.shape", f"must be one of {SHAPES}")
        if comp.shape == "flat_top":
            _check(0 <= 2 * comp.ramp <= sc.truth.duration, f"{p}.ramp", "ramps must fit in the pulse")
        if comp.shape == "sine":
            _check(comp.period > 0, f"{p}.period", "must be positive")
    if sc.truth.coupler_pulse is not None:
        _check(q == 2, "truth.coupler_pulse", "needs n_qubits = 2")
        _check(sc.device.coupler is not None, "device.coupler", "coupler pulse needs coupler parameters")

    seen = set()
    for i, lab in enumerate(sc.initial_states):
        p = f"initial_states[{i}]"
        parts = lab.split(",")
        _check(len(parts) == q, p, f"needs {q} comma-separated single-qubit states")
        _check(all(s.strip() in pauli.CARDINAL_LABELS for s in parts), p, "use +X, -X, +Y, -Y, +Z, -Z")
        _check(lab not in seen, p, "duplicate state")
        seen.add(lab)
    need = min_states(q)
    _check(len(sc.initial_states) >= need, "initial_states",
           f"S >= {need} rule violated: {len(sc.initial_states)} initial state(s) given, at least {need} required")

    rc = sc.reconstruction
    _check(rc.mode in MODES, "reconstruction.mode", f"must be one of {MODES}")
    _check(rc.increment in INCREMENT_MODES, "reconstruction.increment", f"must be one of {INCREMENT_MODES}")
    _check(rc.second_order_model in ("exact", "taylor"), "reconstruction.second_order_model", "must be exact or taylor")
    if rc.recover_labels is not None:
        for i, lab in enumerate(rc.recover_labels):
            _check(lab in valid, f"reconstruction.recover_labels[{i}]", "not a valid Pauli label")
            if rc.mode != "second_order":
                _check(lab in recoverable_labels(q), f"reconstruction.recover_labels[{i}]",
                       "Z-type labels are invisible at first order; precondition them instead")
    for key in ("fixed_hz", "x0_hz"):
        for lab in getattr(rc.preconditioning, key):
            _check(lab in valid, f"reconstruction.preconditioning.{key}.{lab}", "not a valid Pauli label")
    for i, lab in enumerate(rc.preconditioning.optimize):
        _check(lab in valid, f"reconstruction.preconditioning.optimize[{i}]", "not a valid Pauli label")
    for lab in rc.known_hz:
        _check(lab in valid, f"reconstruction.known_hz.{lab}", "not a valid Pauli label")
    if rc.mode == "second_order":
        _check(q == 1, "reconstruction.mode", "second-order update is single-qubit only")

    if sc.kind == "sweep":
        _check(sc.sweep is not None, "sweep", "required for kind 'sweep'")
        _check(sc.sweep.parameter == "duration", "sweep.parameter", "only 'duration' is supported")
        _check(len(sc.sweep.values) >= 2, "sweep.values", "need at least two values")
        for i, v in enumerate(sc.sweep.values):
            try:
                sc.n_steps(v)
            except HamrecError as exc:
                raise ConfigError(f"sweep.values[{i}]", str(exc)) from None
    return notes

