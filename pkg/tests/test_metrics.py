import unittest
import sys
import os
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'src', 'python')))

import numpy as np

from eit_channel.errors import ContractViolationError, InvalidParametersError, ParameterError
from eit_channel.medium import ChannelResponse, EitParameters, channel_response
from eit_channel.metrics import (CurveKind, MetricCurve, average_curves, benchmark_beamsplitter, benchmark_curves,
                                 conditional_variance_analytic, conditional_variance_bruteforce,
                                 conditional_variance_curve, conditional_variance_empirical, curve_to_csv,
                                 fixed_gain_curves, measure_snr, minimise_eq2, signal_transfer,
                                 signal_transfer_curve, signal_transfer_empirical, signal_transfer_model)
from eit_channel.quadrature import NoiseInjection, Quadrature
from eit_channel.synth import CrossSpectrum, SpectrumEstimate
from eit_channel.units import TWO_PI

FS = 4.0e6


def cell_57c():
    return EitParameters.from_group_delay(0.48e-6, spontaneous_rate=TWO_PI * 3e6, dephasing_rate=TWO_PI * 4e3,
                                          pump_rabi=TWO_PI * 1.3e6)


def spectra(s_ii, s_oo, s_oi, freqs=None):
    freqs = np.arange(len(s_ii)) * 1e4 if freqs is None else freqs
    return (SpectrumEstimate(freqs, s_ii, 1e4, 10, FS), SpectrumEstimate(freqs, s_oo, 1e4, 10, FS),
            CrossSpectrum(freqs, s_oi, 1e4, 10, FS))


class TestAnalyticMetrics(unittest.TestCase):
    def test_ideal_channel(self):
        r = ChannelResponse.beamsplitter(1.0)
        self.assertEqual(conditional_variance_analytic(r, NoiseInjection.none()), 0.0)
        self.assertEqual(signal_transfer_model(r, NoiseInjection.none()), 1.0)

    def test_beamsplitter_meets_benchmark(self):
        r = ChannelResponse.beamsplitter(0.7)
        self.assertAlmostEqual(conditional_variance_analytic(r, NoiseInjection.none()), 0.3, places=14)
        self.assertAlmostEqual(signal_transfer_model(r, NoiseInjection.none()), 0.7, places=14)
        v_limit, t_limit = benchmark_beamsplitter(r)
        self.assertAlmostEqual(v_limit, 0.3, places=14)
        self.assertEqual(t_limit, 0.7)

    def test_input_variance_does_not_change_cv(self):
        r = ChannelResponse.beamsplitter(0.4)
        for v_in in (1.0, 10.0, 1e4):
            self.assertAlmostEqual(conditional_variance_analytic(r, NoiseInjection.none(), v_in), 0.6, places=9)
        with self.assertRaises(ParameterError):
            conditional_variance_analytic(r, NoiseInjection.none(), v_in=0.5)

    def test_injection_adds_to_both_metrics(self):
        r = ChannelResponse.beamsplitter(0.6)
        inj = NoiseInjection.pump(0.08, 0.03)
        added = inj.added_variance(Quadrature.AMPLITUDE)
        self.assertAlmostEqual(conditional_variance_analytic(r, inj), 0.4 + added, places=12)
        self.assertAlmostEqual(signal_transfer_model(r, inj), 0.6 / (1.0 + added), places=12)
        phase = signal_transfer_model(r, inj, quadrature=Quadrature.PHASE)
        self.assertGreater(phase, signal_transfer_model(r, inj))

    def test_signal_transfer_ratio(self):
        self.assertEqual(signal_transfer(100.0, 25.0), 0.25)
        np.testing.assert_array_equal(signal_transfer([4.0, 8.0], [2.0, 2.0]), [0.5, 0.25])
        with self.assertRaises(ParameterError):
            signal_transfer(0.0, 1.0)

    def test_curves_agree_with_benchmark_without_excess(self):
        freqs = np.linspace(0.0, 2e6, 41)
        cv = conditional_variance_curve(cell_57c(), freqs, NoiseInjection.none())
        ts = signal_transfer_curve(cell_57c(), freqs, NoiseInjection.none())
        bench_cv, bench_ts = benchmark_curves(cell_57c(), freqs)
        np.testing.assert_allclose(cv.values, bench_cv.values, rtol=0, atol=1e-12)
        np.testing.assert_allclose(ts.values, bench_ts.values, rtol=0, atol=1e-12)
        self.assertEqual(bench_cv.kind, CurveKind.BENCHMARK_CV)
        np.testing.assert_allclose(cv.g_opt ** 2, bench_ts.values, rtol=1e-12)

    def test_optimal_delay_at_dc_is_group_delay(self):
        p = cell_57c()
        cv = conditional_variance_curve(p, [0.0, 1e5], NoiseInjection.none())
        self.assertAlmostEqual(cv.tau_opt[0] / channel_response(p, 0.0).group_delay, 1.0, places=12)
        r = channel_response(p, TWO_PI * 1e5)
        self.assertAlmostEqual(cv.tau_opt[1], r.phase / r.frequency, places=18)


class TestFixedGain(unittest.TestCase):
    def test_fixed_gain_is_optimal_only_where_chosen(self):
        p = cell_57c()
        freqs = np.array([0.0, 1e5, 2e5, 3e5, 5e5])
        output, reference, fixed = fixed_gain_curves(p, freqs, NoiseInjection.none(), v_in=100.0,
                                                     optimise_at_hz=2e5)
        self.assertEqual((output.kind, reference.kind, fixed.kind),
                         (CurveKind.OUTPUT_SPECTRUM, CurveKind.REFERENCE_SPECTRUM,
                          CurveKind.CONDITIONAL_VARIANCE_FIXED))
        optimal = conditional_variance_curve(p, freqs, NoiseInjection.none(), v_in=100.0)
        self.assertAlmostEqual(fixed.values[2], optimal.values[2], delta=1e-9)
        self.assertTrue(np.all(fixed.values >= optimal.values - 1e-9))
        # The two spectra differ by the conditional variance at the chosen point
        self.assertAlmostEqual(output.values[2] - reference.values[2], fixed.values[2], delta=1e-9)


class TestEmpiricalMetrics(unittest.TestCase):
    def test_closed_form(self):
        s_in, s_out, s_cross = spectra([2.0, 2.0, 0.0], [1.5, 1.5, 1.0],
                                       [2.0 * np.sqrt(0.5), 2.0 * np.sqrt(0.5) * np.exp(0.3j), 0.0])
        cv = conditional_variance_empirical(s_in, s_out, s_cross)
        self.assertAlmostEqual(cv.values[0], 0.5, places=14)
        self.assertAlmostEqual(cv.values[1], 0.5, places=14)
        self.assertAlmostEqual(cv.g_opt[1], np.sqrt(0.5), places=14)
        self.assertAlmostEqual(cv.tau_opt[1], 0.3 / (TWO_PI * 1e4), places=18)
        self.assertEqual(cv.tau_opt[0], 0.0)
        # Zero input power is a gap, not an error
        self.assertTrue(np.isnan(cv.values[2]))
        self.assertFalse(cv.valid[2])

    def test_rescaling_scales_variance(self):
        rng = np.random.default_rng(8)
        s_ii = rng.uniform(1.0, 3.0, 16)
        s_oo = rng.uniform(1.0, 3.0, 16)
        s_oi = np.sqrt(s_ii * s_oo) * rng.uniform(0.0, 1.0, 16) * np.exp(1j * rng.uniform(-3, 3, 16))
        base = conditional_variance_empirical(*spectra(s_ii, s_oo, s_oi))
        scaled = conditional_variance_empirical(*spectra(4 * s_ii, 4 * s_oo, 4 * s_oi))
        np.testing.assert_allclose(scaled.values, 4 * base.values, rtol=1e-14, atol=1e-15)
        np.testing.assert_allclose(scaled.g_opt, base.g_opt, rtol=1e-14)

    def test_time_shift_only_moves_delay(self):
        rng = np.random.default_rng(9)
        s_ii = rng.uniform(1.0, 3.0, 8)
        s_oo = rng.uniform(1.0, 3.0, 8)
        s_oi = np.sqrt(s_ii * s_oo) * 0.5 * np.exp(0.1j)
        freqs = np.arange(1, 9) * 1e4
        shift = 1e-6
        base = conditional_variance_empirical(*spectra(s_ii, s_oo, s_oi, freqs))
        moved = conditional_variance_empirical(*spectra(s_ii, s_oo, s_oi * np.exp(1j * TWO_PI * freqs * shift), freqs))
        np.testing.assert_allclose(moved.values, base.values, rtol=1e-12)
        np.testing.assert_allclose(moved.tau_opt - base.tau_opt, shift, rtol=1e-9)

    def test_bruteforce_agrees_with_closed_form(self):
        rng = np.random.default_rng(10)
        s_ii = rng.uniform(1.0, 3.0, 12)
        s_oo = rng.uniform(1.0, 3.0, 12)
        s_oi = np.sqrt(s_ii * s_oo) * rng.uniform(0.1, 0.99, 12) * np.exp(1j * rng.uniform(-3, 3, 12))
        args = spectra(s_ii, s_oo, s_oi, np.arange(1, 13) * 1e4)
        closed = conditional_variance_empirical(*args)
        brute = conditional_variance_bruteforce(*args)
        np.testing.assert_allclose(brute.values, closed.values, rtol=0, atol=1e-3)
        np.testing.assert_allclose(brute.g_opt, closed.g_opt, rtol=0, atol=1e-3)

    def test_minimise_eq2_at_dc(self):
        value, gain, tau = minimise_eq2(2.0, 1.5, 1.0 + 0j, 0.0)
        self.assertAlmostEqual(value, 1.0, delta=1e-6)
        self.assertAlmostEqual(gain, 0.5, delta=1e-4)
        self.assertEqual(tau, 0.0)
        with self.assertRaises(ParameterError):
            minimise_eq2(0.0, 1.0, 0j, 1.0)

    def test_grid_mismatch(self):
        s_in, s_out, s_cross = spectra([1.0, 1.0], [1.0, 1.0], [0.5, 0.5])
        other = SpectrumEstimate([0.0, 2e4], [1.0, 1.0], 1e4, 10, FS)
        with self.assertRaises(ContractViolationError):
            conditional_variance_empirical(s_in, other, s_cross)
        with self.assertRaises(ContractViolationError):
            signal_transfer_empirical(s_in, other, [1e4])


class TestSnr(unittest.TestCase):
    def spectrum(self, floor, tone):
        freqs = np.arange(200) * 1e3
        psd = np.full(200, floor)
        psd[100] += tone
        return SpectrumEstimate(freqs, psd, 1e3, 10, FS)

    def test_measure_snr(self):
        self.assertAlmostEqual(measure_snr(self.spectrum(1.0, 100.0), 100e3), 100.0, places=9)
        self.assertEqual(measure_snr(self.spectrum(1.0, 0.0), 100e3), 0.0)

    def test_signal_transfer_empirical(self):
        curve = signal_transfer_empirical(self.spectrum(1.0, 100.0), self.spectrum(2.0, 50.0), [100e3])
        self.assertEqual(curve.kind, CurveKind.SIGNAL_TRANSFER)
        self.assertAlmostEqual(curve.values[0], 0.25, places=9)

    def test_zero_floor(self):
        with self.assertRaises(ParameterError):
            measure_snr(self.spectrum(0.0, 1.0), 100e3)


class TestMetricCurve(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(InvalidParametersError):
            MetricCurve([0.0, 1.0], [0.5], CurveKind.CONDITIONAL_VARIANCE, Quadrature.AMPLITUDE)
        with self.assertRaises(InvalidParametersError):
            MetricCurve([0.0], [-0.1], CurveKind.CONDITIONAL_VARIANCE, Quadrature.AMPLITUDE)
        with self.assertRaises(InvalidParametersError):
            MetricCurve([0.0], [1.2], CurveKind.BENCHMARK_TS, Quadrature.AMPLITUDE)
        # Above one is fine outside the benchmark kinds
        self.assertEqual(len(MetricCurve([0.0], [1.2], "conditional_variance", "phase")), 1)

    def test_csv_gaps(self):
        curve = MetricCurve([0.0, 1e5], [0.5, np.nan], CurveKind.CONDITIONAL_VARIANCE, Quadrature.AMPLITUDE,
                            g_opt=[0.9, np.nan])
        lines = curve_to_csv(curve).splitlines()
        self.assertEqual(lines[0], "freq_hz,value,g_opt,tau_opt_s,kind,quadrature")
        self.assertEqual(lines[1], "0.0,0.5,0.9,,conditional_variance,amplitude")
        self.assertEqual(lines[2], "100000.0,,,,conditional_variance,amplitude")

    def test_average_curves(self):
        a = MetricCurve([0.0, 1.0], [1.0, 3.0], CurveKind.CONDITIONAL_VARIANCE, Quadrature.AMPLITUDE)
        b = MetricCurve([0.0, 1.0], [3.0, 5.0], CurveKind.CONDITIONAL_VARIANCE, Quadrature.AMPLITUDE)
        mean = average_curves([a, b])
        np.testing.assert_array_equal(mean.values, [2.0, 4.0])
        np.testing.assert_allclose(mean.stderr, [1.0, 1.0])
        self.assertIsNone(mean.g_opt)
        np.testing.assert_array_equal(average_curves([a]).stderr, [0.0, 0.0])
        with self.assertRaises(ParameterError):
            average_curves([])


if __name__ == '__main__':
    unittest.main()
