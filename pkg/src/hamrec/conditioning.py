"""Signal conditioning: voltage record -> z(t) on the reconstruction grid.

Stages, in fixed order: low-pass Butterworth filter, block-average
decimation, removal of the resonator delay, affine rescale from calibration
voltages, clip to [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

from .errors import ContractViolation, InvalidSpecError, UnscaledOutputError
from .readout import MeasurementRecord

PHASE_MODES = ("zero_phase", "causal")
SHIFT_MODES = ("interpolate", "nearest")


@dataclass(frozen=True)
class FilterSpec:
    """Low-pass Butterworth filter; ``critical_freq`` in Hz."""

    order: int = 3
    critical_freq: float = 50e6
    phase_mode: str = "zero_phase"
    kind: str = "lowpass"

    def __post_init__(self):
        if self.order < 1:
            raise InvalidSpecError("filter order must be >= 1")
        if self.critical_freq <= 0:
            raise InvalidSpecError("critical_freq must be positive")
        if self.phase_mode not in PHASE_MODES:
            raise InvalidSpecError(f"phase_mode must be one of {PHASE_MODES}")
        if self.kind != "lowpass":
            raise InvalidSpecError("only low-pass Butterworth filters are supported")


def _butterworth_zpk(spec: FilterSpec, sample_rate: float):
    nyq = 0.5 * sample_rate
    if spec.critical_freq >= nyq:
        raise InvalidSpecError(
            f"critical_freq {spec.critical_freq:g} Hz must be below Nyquist {nyq:g} Hz"
        )
    n = spec.order
    k = np.arange(n)
    proto = np.exp(1j * np.pi * (2 * k + n + 1) / (2 * n))
    fs2 = 2.0 * sample_rate
    warped = fs2 * np.tan(np.pi * spec.critical_freq / sample_rate)
    s_poles = warped * proto
    z_poles = (fs2 + s_poles) / (fs2 - s_poles)
    zeros = -np.ones(n)
    # unit DC gain: H(z=1) = 1
    gain = float(np.real(np.prod(1 - z_poles)) / 2**n)
    return zeros, z_poles, gain


def butterworth_coefficients(spec: FilterSpec, sample_rate: float) -> tuple[np.ndarray, np.ndarray]:
    """Digital Butterworth low-pass ``(b, a)`` by prewarped bilinear transform.

    The analog prototype poles sit on a circle of radius ``2 fs tan(pi fc / fs)``
    so the digital response is exactly -3 dB at ``fc``.  All zeros map to
    ``z = -1`` and the gain is fixed by unit DC response.  For high orders at
    small ``fc / fs`` the expanded polynomials lose precision; filtering
    therefore goes through :func:`butterworth_sos`.
    """
    zeros, poles, gain = _butterworth_zpk(spec, sample_rate)
    return gain * np.real(np.poly(zeros)), np.real(np.poly(poles))


def butterworth_sos(spec: FilterSpec, sample_rate: float) -> np.ndarray:
    """The same filter as cascaded second-order sections, shape (ceil(order/2), 6)."""
    zeros, poles, gain = _butterworth_zpk(spec, sample_rate)
    return scipy.signal.zpk2sos(zeros, poles, gain)


def frequency_response(b: np.ndarray, a: np.ndarray, freqs: np.ndarray, sample_rate: float) -> np.ndarray:
    """Complex response ``H(exp(i 2 pi f / fs))`` at the given frequencies (Hz)."""
    zinv = np.exp(-2j * np.pi * np.asarray(freqs, dtype=float) / sample_rate)
    num = np.polyval(np.asarray(b)[::-1], zinv)
    den = np.polyval(np.asarray(a)[::-1], zinv)
    return num / den


def sos_frequency_response(sos: np.ndarray, freqs: np.ndarray, sample_rate: float) -> np.ndarray:
    _, h = scipy.signal.sosfreqz(sos, worN=np.asarray(freqs, dtype=float), fs=sample_rate)
    return h


def _sos_degree(polys: np.ndarray) -> int:
    return int(sum(2 if c[2] != 0 else 1 if c[1] != 0 else 0 for c in polys))


def filter_apply(samples: np.ndarray, coefficients, phase_mode: str = "zero_phase") -> np.ndarray:
    """Apply an IIR filter once (causal) or forward and backward (zero phase).

    ``coefficients`` is either ``(b, a)`` or an SOS array of shape (k, 6).
    Zero-phase mode pads both ends by odd reflection over ``3 * order``
    samples and starts each pass from the step-response steady state, so
    constants pass through untouched.
    """
    x = np.asarray(samples, dtype=float)
    sos = None
    if isinstance(coefficients, np.ndarray) and coefficients.ndim == 2 and coefficients.shape[1] == 6:
        sos = coefficients
        order = max(_sos_degree(sos[:, :3]), _sos_degree(sos[:, 3:]))
    else:
        b, a = (np.asarray(c, dtype=float) for c in coefficients)
        order = max(len(a), len(b)) - 1
    if x.size <= 3 * order:
        raise ContractViolation(f"need more than {3 * order} samples, got {x.size}")
    if phase_mode not in PHASE_MODES:
        raise InvalidSpecError(f"phase_mode must be one of {PHASE_MODES}")
    if sos is not None:
        if phase_mode == "causal":
            return scipy.signal.sosfilt(sos, x)
        return scipy.signal.sosfiltfilt(sos, x, padtype="odd", padlen=3 * order)
    if phase_mode == "causal":
        return scipy.signal.lfilter(b, a, x)
    return scipy.signal.filtfilt(b, a, x, padtype="odd", padlen=3 * order)


def decimate_mean(samples: np.ndarray, factor: int) -> np.ndarray:
    """Average non-overlapping blocks of ``factor`` samples (trailing remainder dropped)."""
    if factor < 1:
        raise ContractViolation("decimation factor must be >= 1")
    x = np.asarray(samples, dtype=float)
    n = x.size // factor
    return x[: n * factor].reshape(n, factor).mean(axis=1)


def decimation_factor(sample_rate: float, target_dt: float) -> int:
    ratio = sample_rate * target_dt
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9 * max(ratio, 1.0):
        raise ContractViolation(
            f"sample_rate * target_dt = {ratio:g} is not an integer decimation factor"
        )
    return factor


def rescale(voltages: np.ndarray, calibration, clip: bool = True) -> np.ndarray:
    """Map ``calibration = (v_at_z_plus1, v_at_z_minus1)`` onto +1 / -1."""
    if calibration is None:
        raise UnscaledOutputError("rescaling needs calibration voltages (v_plus, v_minus)")
    v_plus, v_minus = (float(v) for v in calibration)
    half = 0.5 * (v_plus - v_minus)
    if half == 0:
        raise ContractViolation("calibration voltages coincide")
    z = (np.asarray(voltages, dtype=float) - 0.5 * (v_plus + v_minus)) / half
    return np.clip(z, -1.0, 1.0) if clip else z


def condition_record(
    record: MeasurementRecord,
    spec: FilterSpec | None,
    target_dt: float,
    tau: float,
    calibration=None,
    *,
    n_out: int | None = None,
    shift_mode: str = "interpolate",
    clip: bool = True,
) -> np.ndarray:
    """Turn an averaged voltage record into ``z(t_n)``, ``t_n = n * target_dt``.

    ``record.t0`` places the first sample on the qubit clock.  With
    ``shift_mode="interpolate"`` each decimated bin is assigned its centroid
    time minus ``tau`` and the series is linearly interpolated onto the grid.
    ``shift_mode="nearest"`` instead advances by ``round(tau / target_dt)``
    whole bins, which leaves a residual of up to half a bin.
    ``spec=None`` skips filtering.
    """
    cal = calibration if calibration is not None else record.calibration
    if cal is None:
        raise UnscaledOutputError("record has no calibration and none was supplied")
    if shift_mode not in SHIFT_MODES:
        raise ContractViolation(f"shift_mode must be one of {SHIFT_MODES}")
    fs = record.sample_rate
    factor = decimation_factor(fs, target_dt)
    v = np.asarray(record.samples, dtype=float)
    if spec is not None:
        v = filter_apply(v, butterworth_sos(spec, fs), spec.phase_mode)
    bins = decimate_mean(v, factor)
    if shift_mode == "interpolate":
        centroids = record.t0 + (np.arange(bins.size) * factor + 0.5 * (factor - 1)) / fs - tau
        count = n_out if n_out is not None else int(np.floor(centroids[-1] / target_dt)) + 1
        grid = np.arange(count) * target_dt
        if grid[-1] > centroids[-1] + 1e-15 or grid[0] < centroids[0] - 1e-15:
            raise ContractViolation("record does not cover the requested grid after the delay shift")
        shifted = np.interp(grid, centroids, bins)
    else:
        start = record.t0 / target_dt
        if abs(start - round(start)) > 1e-6:
            raise ContractViolation("nearest-bin shift needs t0 on the target grid")
        offset = -int(round(start)) + int(round(tau / target_dt))
        if offset < 0:
            raise ContractViolation("record starts after the first grid point")
        shifted = bins[offset:]
        if n_out is not None:
            if shifted.size < n_out:
                raise ContractViolation("record too short for the requested grid")
            shifted = shifted[:n_out]
    return rescale(shifted, cal, clip=clip)
