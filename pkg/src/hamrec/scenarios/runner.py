"""Execute scenarios and write their artifact bundles."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__, pauli
from ..coupler import chevron, epsilon_for_swap_time
from ..engine import ReconstructionInput, optimize_preconditioning, reconstruct
from ..errors import HamrecError
from ..io import write_csv, write_json
from ..lindblad import PauliHamiltonian
from ..metrics import dynamical_coherent_fidelity, mean_reconstruction_fidelity
from ..synth import SyntheticDataset, simulate_dataset
from .config import TWO_PI, Scenario, validate


class ScenarioFailure(HamrecError):
    """An engine or simulation error raised while running a named scenario."""

    def __init__(self, scenario: str, cause: Exception):
        super().__init__(f"scenario {scenario!r}: {type(cause).__name__}: {cause}")
        self.scenario = scenario
        self.cause = cause


@dataclass
class ReconstructionRun:
    """In-memory products of one simulate -> reconstruct -> score pass."""

    dataset: SyntheticDataset
    reference: PauliHamiltonian
    result: object
    per_state: np.ndarray
    mean_fidelity: float
    dynamical: object
    preconditioning: dict = field(default_factory=dict)


@dataclass
class RunOutcome:
    out_dir: Path
    files: list[Path]
    summary: dict


def output_dir(sc: Scenario, root) -> Path:
    return Path(root) / f"{sc.name}_seed{sc.seed}"


def _hz_dict(values: dict) -> dict:
    return {lab: TWO_PI * float(v) for lab, v in values.items()}


def simulate(sc: Scenario, duration: float | None = None, ramp_fraction: float | None = None):
    truth, ref = sc.hamiltonians(duration, ramp_fraction)
    pl = sc.pipeline
    ds = simulate_dataset(
        truth, sc.initial_states, sc.device.rates(), sc.readout_params(),
        n_shots=sc.effective_shots(), seed=sc.seed, filter_spec=pl.filter_spec(),
        readout_model=pl.readout_model, shift_mode=pl.shift_mode,
        taus=[r.resolved_tau() for r in sc.device.readout],
    )
    return ds, ref


def reconstruct_dataset(sc: Scenario, ds: SyntheticDataset, ref: PauliHamiltonian, z=None) -> ReconstructionRun:
    rc = sc.reconstruction
    z = ds.z_measured if z is None else z
    inp = ReconstructionInput(
        sc.n_qubits, sc.dt, z, ds.rho0, ds.rates,
        preconditioned=_hz_dict(rc.preconditioning.fixed_hz),
        recover_labels=rc.recover_labels,
    )
    kwargs = {}
    if rc.mode == "second_order":
        kwargs = {"known": _hz_dict(rc.known_hz), "model": rc.second_order_model}
    else:
        kwargs = {"increment": rc.increment, "output_filter": rc.output_filter_spec()}
    pre_info = {}
    if rc.preconditioning.optimize:
        labels = list(rc.preconditioning.optimize)
        x0 = [TWO_PI * rc.preconditioning.x0_hz.get(lab, 0.0) for lab in labels]
        opt = optimize_preconditioning(
            inp, labels, ds.tomography_final, x0=x0,
            max_evaluations=rc.preconditioning.max_evaluations, **kwargs,
        )
        inp = inp.with_preconditioned(opt.amplitudes)
        pre_info = {
            "labels": labels,
            "amplitudes_hz": {lab: opt.amplitudes[lab] / TWO_PI for lab in labels},
            "fidelity": opt.fidelity,
            "baseline_fidelity": opt.baseline_fidelity,
            "gain": opt.gain,
            "evaluations": opt.n_evaluations,
        }
    result = reconstruct(inp, rc.mode, **kwargs)
    fid = mean_reconstruction_fidelity(result, ds.tomography_final)
    dyn = dynamical_coherent_fidelity(result.amplitudes, ref)
    return ReconstructionRun(ds, ref, result, fid.per_state, fid.mean, dyn, pre_info)


def run_reconstruction(sc: Scenario) -> ReconstructionRun:
    try:
        ds, ref = simulate(sc)
        return reconstruct_dataset(sc, ds, ref)
    except HamrecError as exc:
        raise ScenarioFailure(sc.name, exc) from exc


def _label_order(q: int, *hams: PauliHamiltonian) -> list[str]:
    present = set()
    for h in hams:
        present.update(lab for lab, s in h.amplitudes.items())
    return [lab for lab in pauli.pauli_labels(q) if lab in present]


def _state_tag(label: str) -> str:
    return label.replace(",", "")


def _manifest(sc: Scenario, notes: list[str], extra: dict | None = None) -> dict:
    resolved = {
        "tau": [r.resolved_tau() for r in sc.device.readout],
        "noise_sigma": [p.noise_sigma for p in sc.readout_params()],
        "effective_shots": sc.effective_shots(),
        "rates": [r.__dict__ for r in sc.device.rates()],
    }
    out = {"toolkit_version": __version__, "seed": sc.seed, "scenario": sc.to_dict(),
           "resolved": resolved, "warnings": notes}
    if extra:
        out.update(extra)
    return out


def _write_reconstruction(sc: Scenario, run: ReconstructionRun, out: Path) -> tuple[list[Path], dict]:
    ds, res = run.dataset, run.result
    q, n = sc.n_qubits, ds.truth.n_steps
    t_amp = np.arange(n) * sc.dt
    t_z = np.arange(n + 1) * sc.dt
    labels = _label_order(q, ds.truth, res.amplitudes) or list(res.recovered_labels)
    files = [
        write_csv(out / "truth_amplitudes.csv", ["time_s", *labels],
                  [t_amp, *[ds.truth.amplitude(lab) for lab in labels]]),
        write_csv(out / "reconstructed_amplitudes.csv", ["time_s", *labels],
                  [t_amp, *[res.amplitudes.amplitude(lab) for lab in labels]]),
    ]
    header, cols = ["time_s"], [t_z]
    for s, lab in enumerate(ds.state_labels):
        for qi in range(q):
            tag = f"{_state_tag(lab)}_q{qi + 1}"
            header += [f"z_true_{tag}", f"z_cond_{tag}"]
            cols += [ds.z_true[s, qi], ds.z_measured[s, qi]]
    files.append(write_csv(out / "z_traces.csv", header, cols))
    d = res.diagnostics
    files.append(write_csv(out / "diagnostics.csv", ["step", "rank", "min_singular_value", "residual"],
                           [np.arange(n), d.rank, d.min_singular_value, d.residual]))
    dyn = run.dynamical
    fidelity = {
        "per_state": {lab: float(f) for lab, f in zip(ds.state_labels, run.per_state)},
        "mean": run.mean_fidelity,
        "mode": res.mode,
        "recovered_labels": list(res.recovered_labels),
        "dynamical_coherent": {"times_s": dyn.times.tolist(), "values": dyn.values.tolist(),
                               "final": float(dyn.values[-1]), "minimum": float(dyn.values.min())},
        "preconditioning": run.preconditioning,
    }
    files.append(write_json(out / "fidelity.json", fidelity))
    return files, {"mean_fidelity": run.mean_fidelity, "final_coherent": float(dyn.values[-1])}


def _run_sweep(sc: Scenario, out: Path) -> tuple[list[Path], dict]:
    sw = sc.sweep
    rows = {k: [] for k in ("mean", "min", "max", "truth_z_mean")}
    for duration in sw.values:
        ds, ref = simulate(sc, duration, sw.ramp_fraction)
        run = reconstruct_dataset(sc, ds, ref)
        inf = 1 - run.per_state
        rows["mean"].append(float(np.mean(inf)))
        rows["min"].append(float(np.min(inf)))
        rows["max"].append(float(np.max(inf)))
        if sw.include_truth_z:
            base = reconstruct_dataset(sc, ds, ref, z=ds.z_true)
            rows["truth_z_mean"].append(1 - base.mean_fidelity)
        else:
            rows["truth_z_mean"].append(float("nan"))
    files = [write_csv(
        out / "summary.csv",
        ["duration_s", "mean_infidelity", "min_infidelity", "max_infidelity", "truth_z_mean_infidelity"],
        [sw.values, rows["mean"], rows["min"], rows["max"], rows["truth_z_mean"]],
    )]
    return files, {"durations": list(sw.values), "mean_infidelity": rows["mean"]}


def _run_chevron(sc: Scenario, out: Path) -> tuple[list[Path], dict]:
    cfg = sc.chevron
    p = sc.device.coupler.params()
    eps = epsilon_for_swap_time(cfg.swap_time, p)
    det_hz = np.linspace(-cfg.detuning_span_hz, cfg.detuning_span_hz, cfg.n_detunings)
    times = np.linspace(0.0, cfg.max_time, cfg.n_times)
    scan = chevron(p, eps, TWO_PI * det_hz, times)
    dd, tt = np.meshgrid(det_hz, times, indexing="ij")
    files = [write_csv(out / "chevron.csv", ["detuning_hz", "time_s", "population_10"],
                       [dd.ravel(), tt.ravel(), scan.population_10.ravel()])]
    return files, {"epsilon": eps, "min_population_10": float(scan.population_10.min())}


def run_scenario(sc: Scenario, out_root=".") -> RunOutcome:
    """Run ``sc`` and write its artifacts under ``out_root/<name>_seed<seed>/``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        notes = validate(sc)
    out = output_dir(sc, out_root)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if sc.kind == "reconstruction":
            files, summary = _write_reconstruction(sc, run_reconstruction(sc), out)
        elif sc.kind == "sweep":
            files, summary = _run_sweep(sc, out)
        else:
            files, summary = _run_chevron(sc, out)
    except ScenarioFailure:
        raise
    except HamrecError as exc:
        raise ScenarioFailure(sc.name, exc) from exc
    files.append(write_json(out / "manifest.json", _manifest(sc, notes)))
    return RunOutcome(out, files, summary)


def load_manifest(path) -> Scenario:
    """Rebuild the exact scenario recorded in a ``manifest.json``."""
    data = json.loads(Path(path).read_text())
    return Scenario.from_dict(data["scenario"])
