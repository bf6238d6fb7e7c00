"""Command-line entry point: ``hamrec run|list|describe|validate``.

Exit codes: 0 success, 2 bad configuration or usage, 3 reconstruction failed
(singular system, unobservable Z, no convergence), 4 any other toolkit error,
5 file-system error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from .errors import ConfigError, HamrecError, NoConvergenceError, SingularSystemError, UnobservableZError
from .scenarios import (
    Scenario,
    ScenarioFailure,
    describe_scenario,
    list_scenarios,
    load_scenario,
    run_scenario,
    validate,
)

EXIT_OK, EXIT_CONFIG, EXIT_ENGINE, EXIT_TOOLKIT, EXIT_IO = 0, 2, 3, 4, 5
OUT_ENV = "HAMREC_OUT"


def resolve(ref: str) -> Scenario:
    """A gallery name, a scenario JSON file, or a ``manifest.json`` from a previous run."""
    path = Path(ref)
    if path.is_file():
        text = path.read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            data = None
        if isinstance(data, dict) and "scenario" in data and "toolkit_version" in data:
            return Scenario.from_dict(data["scenario"], str(path))
        return Scenario.from_json(text, str(path))
    return load_scenario(ref)


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, ScenarioFailure):
        exc = exc.cause
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (SingularSystemError, UnobservableZError, NoConvergenceError)):
        return EXIT_ENGINE
    if isinstance(exc, HamrecError):
        return EXIT_TOOLKIT
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc


def _cmd_list(args) -> int:
    for name in list_scenarios():
        print(name)
    return EXIT_OK


def _cmd_describe(args) -> int:
    print(describe_scenario(args.scenario))
    return EXIT_OK


def _cmd_validate(args) -> int:
    sc = resolve(args.scenario)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        validate(sc)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(f"{sc.name}: ok")
    return EXIT_OK


def _cmd_run(args) -> int:
    sc = resolve(args.scenario).with_overrides(seed=args.seed, shots=args.shots, noiseless=args.noiseless)
    out_root = args.out or os.environ.get(OUT_ENV) or "runs"
    outcome = run_scenario(sc, out_root)
    print(f"{sc.name}: wrote {len(outcome.files)} files to {outcome.out_dir}")
    for key, val in outcome.summary.items():
        print(f"  {key}: {val}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hamrec", description="Hamiltonian reconstruction scenarios")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list bundled scenarios").set_defaults(func=_cmd_list)
    d = sub.add_parser("describe", help="describe a bundled scenario")
    d.add_argument("scenario")
    d.set_defaults(func=_cmd_describe)
    v = sub.add_parser("validate", help="validate a scenario name or config file")
    v.add_argument("scenario")
    v.set_defaults(func=_cmd_validate)
    r = sub.add_parser("run", help="run a scenario and write artifacts")
    r.add_argument("scenario", help="gallery name, config file or manifest.json")
    r.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./runs)")
    r.add_argument("--seed", type=int)
    r.add_argument("--shots", type=int)
    r.add_argument("--noiseless", action="store_true", help="noise_sigma = 0 and one shot")
    r.set_defaults(func=_cmd_run)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HamrecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
