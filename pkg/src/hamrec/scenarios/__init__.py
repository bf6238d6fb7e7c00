"""Scenario configs, the bundled gallery and the batch runner."""

from __future__ import annotations

from importlib import resources

from ..errors import ConfigError
from .config import Scenario, validate
from .runner import RunOutcome, ScenarioFailure, load_manifest, run_scenario


class UnknownScenarioError(ConfigError):
    def __init__(self, name: str):
        super().__init__("name", f"unknown scenario {name!r}; try 'hamrec list'")


def _gallery():
    return resources.files(__package__).joinpath("gallery")


def list_scenarios() -> list[str]:
    return sorted(p.name[:-5] for p in _gallery().iterdir() if p.name.endswith(".json"))


def load_scenario(name: str) -> Scenario:
    path = _gallery().joinpath(f"{name}.json")
    if not path.is_file():
        raise UnknownScenarioError(name)
    return Scenario.from_json(path.read_text(), f"gallery/{name}.json")


def describe_scenario(name: str) -> str:
    sc = load_scenario(name)
    rc = sc.reconstruction
    lines = [
        f"{sc.name} ({sc.kind}, {sc.n_qubits} qubit{'s' if sc.n_qubits > 1 else ''})",
        sc.description,
    ]
    if sc.kind != "chevron":
        lines.append(
            f"grid {sc.dt * 1e9:g} ns, duration {sc.truth.duration * 1e9:g} ns, "
            f"{len(sc.initial_states)} initial states, {sc.effective_shots()} shots/state, mode {rc.mode}"
        )
    if rc.preconditioning.optimize:
        labs = "/".join(f"Omega_{lab}" for lab in rc.preconditioning.optimize)
        lines.append(f"preconditioning of {labs} optimized against final-state tomography")
    return "\n".join(lines)


__all__ = [
    "RunOutcome",
    "Scenario",
    "ScenarioFailure",
    "UnknownScenarioError",
    "describe_scenario",
    "list_scenarios",
    "load_manifest",
    "load_scenario",
    "run_scenario",
    "validate",
]
