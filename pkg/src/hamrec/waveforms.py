"""Pulse envelopes sampled at bin midpoints."""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation


def envelope(n_steps: int, ramp_steps: int = 0) -> np.ndarray:
    """Unit flat top with raised-cosine edges of ``ramp_steps`` bins each."""
    if ramp_steps < 0 or 2 * ramp_steps > n_steps:
        raise ContractViolation("ramps longer than the pulse")
    e = np.ones(n_steps)
    if ramp_steps:
        k = np.arange(ramp_steps) + 0.5
        edge = 0.5 * (1 - np.cos(np.pi * k / ramp_steps))
        e[:ramp_steps] = edge
        e[n_steps - ramp_steps:] = edge[::-1]
    return e


def flat_top_cosine(n_steps: int, dt: float, area: float, ramp: float) -> np.ndarray:
    """Flat-top pulse with cosine ramps whose ZOH integral equals ``area``."""
    shape = envelope(n_steps, int(round(ramp / dt)))
    return area * shape / (np.sum(shape) * dt)


def sine_wave(n_steps: int, dt: float, amplitude: float, period: float, phase: float = 0.0) -> np.ndarray:
    t = (np.arange(n_steps) + 0.5) * dt
    return amplitude * np.sin(2 * np.pi * t / period + phase)


def steps_for(duration: float, dt: float) -> int:
    n = int(round(duration / dt))
    if n < 1 or abs(n * dt - duration) > 1e-6 * dt:
        raise ContractViolation(f"duration {duration:g} s is not a whole number of {dt:g} s bins")
    return n
