import numpy as np
import pytest
import scipy.signal
from hypothesis import given
from hypothesis import strategies as st

from hamrec.conditioning import (
    FilterSpec,
    butterworth_coefficients,
    butterworth_sos,
    condition_record,
    decimate_mean,
    decimation_factor,
    filter_apply,
    frequency_response,
    rescale,
    sos_frequency_response,
)
from hamrec.errors import ContractViolation, InvalidSpecError, UnscaledOutputError
from hamrec.readout import MeasurementRecord, ReadoutParams, resonator_response_adiabatic, synthesize_shots
from helpers import TWO_PI
from oracles import butterworth_bilinear_magnitude

FS = 1e9


def mag(spec, f):
    b, a = butterworth_coefficients(spec, FS)
    return np.abs(frequency_response(b, a, np.atleast_1d(f), FS))


class TestButterworth:
    def test_first_order_quarter_band(self):
        assert mag(FilterSpec(1, FS / 4), FS / 4)[0] == pytest.approx(2**-0.5, rel=0.01)

    def test_third_order_checkpoints(self):
        spec = FilterSpec(3, 50e6)
        h = mag(spec, [0.0, 50e6, 200e6])
        assert h[0] == pytest.approx(1, abs=1e-6)
        assert h[1] == pytest.approx(2**-0.5, rel=0.01)
        assert h[2] < 0.02

    def test_fifth_order_steeper(self):
        assert mag(FilterSpec(5, 50e6), 100e6)[0] < mag(FilterSpec(3, 50e6), 100e6)[0]

    @pytest.mark.parametrize("order", [1, 2, 3, 5])
    @pytest.mark.parametrize("fc", [20e6, 50e6, 300e6])
    def test_matches_closed_form(self, order, fc):
        f = np.linspace(0, 0.49 * FS, 200)
        h = mag(FilterSpec(order, fc), f)
        assert np.allclose(h, butterworth_bilinear_magnitude(f, fc, FS, order), atol=1e-8)

    @pytest.mark.parametrize("order", [1, 3, 5, 8])
    @pytest.mark.parametrize("fc", [0.5e6, 2e6, 50e6, 300e6])
    def test_sos_matches_closed_form(self, order, fc):
        f = np.linspace(0, 0.49 * FS, 200)
        h = np.abs(sos_frequency_response(butterworth_sos(FilterSpec(order, fc), FS), f, FS))
        assert np.allclose(h, butterworth_bilinear_magnitude(f, fc, FS, order), atol=1e-8)

    @pytest.mark.parametrize("order", [1, 3, 5])
    def test_matches_scipy_design(self, order):
        b, a = butterworth_coefficients(FilterSpec(order, 50e6), FS)
        b2, a2 = scipy.signal.butter(order, 50e6, fs=FS)
        assert np.allclose(b / a[0], b2 / a2[0], rtol=1e-8, atol=1e-14)
        assert np.allclose(a / a[0], a2 / a2[0], rtol=1e-8)

    def test_nyquist_rejected(self):
        with pytest.raises(InvalidSpecError):
            butterworth_coefficients(FilterSpec(3, 500e6), FS)

    def test_spec_validation(self):
        with pytest.raises(InvalidSpecError):
            FilterSpec(0)
        with pytest.raises(InvalidSpecError):
            FilterSpec(phase_mode="sideways")


class TestFilterApply:
    def test_constant_passes(self):
        coef = butterworth_coefficients(FilterSpec(3, 50e6), FS)
        out = filter_apply(np.full(300, 0.37), coef)
        assert np.allclose(out, 0.37, atol=1e-9)

    def test_sinusoid_at_cutoff_halved(self):
        fc = 50e6
        coef = butterworth_coefficients(FilterSpec(3, fc), FS)
        t = np.arange(4000) / FS
        out = filter_apply(np.sin(TWO_PI * fc * t), coef)
        mid = slice(500, 3500)
        basis = np.column_stack([np.sin(TWO_PI * fc * t[mid]), np.cos(TWO_PI * fc * t[mid])])
        amp = np.hypot(*np.linalg.lstsq(basis, out[mid], rcond=None)[0])
        assert amp == pytest.approx(0.5, rel=0.02)

    def test_causal_impulse_response(self):
        b, a = butterworth_coefficients(FilterSpec(3, 80e6), FS)
        x = np.zeros(64)
        x[0] = 1
        y = np.zeros_like(x)
        for n in range(x.size):
            acc = sum(b[k] * x[n - k] for k in range(len(b)) if n - k >= 0)
            acc -= sum(a[k] * y[n - k] for k in range(1, len(a)) if n - k >= 0)
            y[n] = acc / a[0]
        assert np.allclose(filter_apply(x, (b, a), "causal"), y, atol=1e-14)

    @pytest.mark.parametrize("mode", ["zero_phase", "causal"])
    def test_sos_and_polynomial_agree(self, mode):
        spec = FilterSpec(3, 50e6)
        x = np.random.default_rng(3).normal(size=400)
        a = filter_apply(x, butterworth_coefficients(spec, FS), mode)
        b = filter_apply(x, butterworth_sos(spec, FS), mode)
        assert np.allclose(a, b, atol=1e-10)

    def test_too_short(self):
        with pytest.raises(ContractViolation):
            filter_apply(np.ones(9), butterworth_coefficients(FilterSpec(3, 50e6), FS))


class TestDecimation:
    @given(st.integers(1, 8), st.integers(1, 40), st.integers(0, 2**32 - 1))
    def test_mean_preserved(self, factor, blocks, seed):
        x = np.random.default_rng(seed).normal(size=factor * blocks)
        assert decimate_mean(x, factor).mean() == pytest.approx(x.mean(), abs=1e-12)

    def test_factor(self):
        assert decimation_factor(FS, 2e-9) == 2
        with pytest.raises(ContractViolation):
            decimation_factor(FS, 2.5e-9)


class TestRescale:
    @given(st.floats(-5, 5), st.floats(0.01, 5))
    def test_endpoints(self, mid, half):
        cal = (mid - half, mid + half)
        out = rescale(np.array([cal[0], cal[1], mid]), cal)
        assert np.allclose(out, [1, -1, 0], atol=1e-9)

    def test_clip(self):
        out = rescale(np.array([-1.3 * 0.1]), (-0.1, 0.1))
        assert out[0] == 1.0

    def test_missing_calibration(self):
        with pytest.raises(UnscaledOutputError):
            rescale(np.zeros(3), None)


@pytest.fixture
def q1():
    return ReadoutParams.from_photons(TWO_PI * 11.78e6, TWO_PI * 0.64e6, 0.94)


def record_for(z, p, t0=0.0):
    rec = synthesize_shots(resonator_response_adiabatic(z, p), p, 1, t0=t0)
    return rec.with_calibration(-p.signal_scale, p.signal_scale)


class TestConditionRecord:
    def test_constant_plus_one(self, q1):
        z = condition_record(record_for(np.ones(600), q1), FilterSpec(), 2e-9, q1.tau)
        assert np.allclose(z, 1.0, atol=1e-6)

    @pytest.mark.parametrize("mode", ["interpolate", "nearest"])
    def test_rabi_round_trip(self, q1, mode):
        pre = 40
        t = (np.arange(pre + 400) - pre) / FS
        z_true = np.cos(TWO_PI * 2e6 * np.clip(t, 0, None))
        rec = record_for(z_true, q1, t0=-pre / FS)
        z = condition_record(rec, FilterSpec(), 2e-9, q1.tau, n_out=126, shift_mode=mode)
        grid = np.arange(126) * 2e-9
        ref = np.cos(TWO_PI * 2e6 * grid)
        assert np.sqrt(np.mean((z - ref) ** 2)) < 0.02

    def test_missing_calibration(self, q1):
        rec = synthesize_shots(resonator_response_adiabatic(np.ones(100), q1), q1, 1)
        with pytest.raises(UnscaledOutputError):
            condition_record(rec, FilterSpec(), 2e-9, q1.tau)

    def test_spike_clipped(self):
        v = np.zeros(200)
        v[100:110] = 1.3 * -0.1
        rec = MeasurementRecord(FS, v, calibration=(-0.1, 0.1))
        z = condition_record(rec, None, 2e-9, 0.0, shift_mode="nearest")
        assert z.max() == 1.0

    def test_fixed_stage_order(self, q1):
        rng = np.random.default_rng(8)
        v = rng.normal(0, 0.05, 800)
        cal = (-0.04, 0.05)
        spec = FilterSpec(3, 60e6)
        rec = MeasurementRecord(FS, v, calibration=cal)
        got = condition_record(rec, spec, 4e-9, 12e-9, shift_mode="nearest", clip=False)
        filt = filter_apply(v, butterworth_coefficients(spec, FS))
        bins = decimate_mean(filt, 4)[3:]
        assert np.allclose(got, rescale(bins, cal, clip=False), atol=1e-12)
        swapped = filter_apply(decimate_mean(v, 4), butterworth_coefficients(spec, FS / 4))[3:]
        assert not np.allclose(got, rescale(swapped, cal, clip=False), atol=1e-3)

    @given(st.floats(0.2, 3.0), st.floats(-0.1, 0.1))
    def test_affine_covariance(self, alpha, beta):
        rng = np.random.default_rng(1)
        v = rng.normal(0, 0.01, 400)
        cal = (-0.05, 0.05)
        m, h = 0.0, -0.05
        base = condition_record(MeasurementRecord(FS, v, calibration=cal), FilterSpec(), 2e-9, 0.0,
                                clip=False, shift_mode="nearest")
        moved = condition_record(MeasurementRecord(FS, alpha * v + beta, calibration=cal), FilterSpec(),
                                 2e-9, 0.0, clip=False, shift_mode="nearest")
        assert np.allclose(moved, alpha * base + (alpha * m + beta - m) / h, atol=1e-9)

    def test_over_filtering_monotone(self, q1):
        pre = 40
        t = (np.arange(pre + 500) - pre) / FS
        z_true = np.cos(TWO_PI * 4e6 * np.clip(t, 0, None))
        rec = record_for(z_true, q1, t0=-pre / FS)
        grid = np.arange(126) * 2e-9
        ref = np.cos(TWO_PI * 4e6 * grid)
        errs = []
        for fc in (50e6, 20e6, 12e6, 8e6, 5e6, 3e6):
            z = condition_record(rec, FilterSpec(3, fc), 2e-9, q1.tau, n_out=126)
            errs.append(np.sqrt(np.mean((z - ref) ** 2)))
        assert all(a < b for a, b in zip(errs, errs[1:]))

    def test_nearest_requires_grid_t0(self, q1):
        rec = record_for(np.ones(300), q1, t0=-1e-9)
        with pytest.raises(ContractViolation):
            condition_record(rec, None, 2e-9, q1.tau, shift_mode="nearest")
