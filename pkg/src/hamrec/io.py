"""Deterministic CSV/JSON writers and measurement-record files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np



def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))  # shortest string that round-trips


def write_csv(path: Path, header: Sequence[str], columns: Sequence[Sequence]) -> Path:
    """Column-oriented CSV with '\\n' line endings; floats round-trip exactly."""
    path = Path(path)
    lengths = {len(c) for c in columns}
    if len(lengths) > 1:
        raise ValueError(f"columns differ in length: {sorted(lengths)}")
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in text[1:]])
    return header, data.reshape(len(text) - 1, len(header))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(path: Path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def write_record(path: Path, record, *, params=None, seed=None) -> tuple[Path, Path]:
    """A measurement record as ``time_s,voltage`` plus a ``.json`` sidecar.

    The sidecar carries the sample rate, shot count, applied delay,
    calibration voltages, ``t0``, and the readout ``params`` and ``seed``
    that produced it when given.  Individual shots are not written.
    """
    from .readout import MeasurementRecord  # local: readout imports nothing from here

    if not isinstance(record, MeasurementRecord):
        raise TypeError("write_record expects a MeasurementRecord")
    path = Path(path)
    csv_path = write_csv(path, ["time_s", "voltage"], [record.times, record.samples])
    meta = {
        "sample_rate": record.sample_rate,
        "n_shots_averaged": record.n_shots_averaged,
        "delay_applied": record.delay_applied,
        "calibration": list(record.calibration) if record.calibration else None,
        "t0": record.t0,
        "n_samples": int(record.samples.size),
        "params": dict(params.__dict__) if params is not None else None,
        "seed": seed,
    }
    return csv_path, write_json(path.with_suffix(".json"), meta)


def read_record(path: Path):
    from .readout import MeasurementRecord

    path = Path(path)
    header, data = read_csv(path)
    if header != ["time_s", "voltage"]:
        raise ValueError(f"{path}: expected columns time_s,voltage, got {header}")
    meta = json.loads(path.with_suffix(".json").read_text())
    cal = meta.get("calibration")
    return MeasurementRecord(
        float(meta["sample_rate"]), data[:, 1].copy(), int(meta["n_shots_averaged"]),
        float(meta["delay_applied"]), tuple(cal) if cal else None, float(meta["t0"]),
    )
