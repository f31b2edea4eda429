import unittest
import shutil
import tempfile
import sys
import os
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'src', 'python')))

import numpy as np

from eit_channel.errors import DegenerateFitError, FitConvergenceError, ParameterError
from eit_channel.fit import FitProblem, fit, model_values, read_fit_data, synthesize_fit_data
from eit_channel.medium import EitParameters
from eit_channel.metrics import CurveKind
from eit_channel.units import TWO_PI

BUNDLED_DATA = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'src', 'python', 'eit_channel',
                                            'scenarios', 'fit_gamma0_data.csv'))
FREQS = np.linspace(0.0, 1e6, 41)


def cell(group_delay=0.48e-6, dephasing_hz=4e3):
    return EitParameters.from_group_delay(group_delay, spontaneous_rate=TWO_PI * 3e6,
                                          dephasing_rate=TWO_PI * dephasing_hz, pump_rabi=TWO_PI * 1.3e6)


class TestFitProblem(unittest.TestCase):
    def test_needs_enough_points(self):
        with self.assertRaises(ParameterError):
            FitProblem([0.0], [0.1], cell())
        with self.assertRaises(ParameterError):
            FitProblem([0.0, 1.0, 2.0], [0.1, 0.1, 0.1], cell(), free=("dephasing_rate", "optical_depth_rate"))

    def test_rejects_bad_input(self):
        base = cell()
        with self.assertRaises(ParameterError):
            FitProblem(FREQS, np.zeros(41), base, free=("medium_length",))
        with self.assertRaises(ParameterError):
            FitProblem(FREQS, np.zeros(41), base, kind=CurveKind.CONDITIONAL_VARIANCE)
        with self.assertRaises(ParameterError):
            FitProblem(FREQS, np.full(41, np.nan), base)
        with self.assertRaises(ParameterError):
            FitProblem(FREQS, np.zeros(41), base, sigma=np.zeros(41))
        with self.assertRaises(ParameterError):
            FitProblem(FREQS, np.zeros(41), base, bounds={"dephasing_rate": (0.0, 10.0)})
        with self.assertRaises(ParameterError):
            FitProblem(FREQS, np.zeros(41), base, bounds={"pump_rabi": (0.0, 1e9)}, free=("pump_rabi",))

    def test_default_bounds(self):
        problem = FitProblem(FREQS, np.zeros(41), cell(), free=("dephasing_rate", "pump_rabi"))
        self.assertEqual(problem.bound("dephasing_rate"), (0.0, np.inf))
        lo, hi = problem.bound("pump_rabi")
        self.assertGreater(lo, 0.0)
        self.assertEqual(problem.start("pump_rabi"), TWO_PI * 1.3e6)


class TestFit(unittest.TestCase):
    def test_recovers_dephasing_from_clean_data(self):
        values, sigma = synthesize_fit_data(cell(), FREQS)
        self.assertIsNone(sigma)
        problem = FitProblem(FREQS, values, cell(dephasing_hz=1e3))
        result = fit(problem)
        self.assertAlmostEqual(result.values["dephasing_rate"] / (TWO_PI * 4e3), 1.0, delta=1e-3)
        self.assertLess(result.residual_norm, result.initial_residual_norm)
        chi2 = [step["chi2"] for step in result.trace]
        self.assertTrue(all(b <= a for a, b in zip(chi2, chi2[1:])))
        self.assertEqual(result.iterations, len(result.trace))

    def test_recovers_dephasing_from_noisy_data(self):
        truth = cell(group_delay=0.18e-6, dephasing_hz=3.5e3)
        values, sigma = synthesize_fit_data(truth, FREQS, noise_fraction=0.02, seed=42)
        self.assertEqual(sigma.shape, values.shape)
        problem = FitProblem(FREQS, values, cell(group_delay=0.18e-6, dephasing_hz=1e3), sigma=sigma)
        result = fit(problem)
        self.assertAlmostEqual(result.values["dephasing_rate"] / (TWO_PI * 3.5e3), 1.0, delta=0.1)
        self.assertGreater(result.uncertainties["dephasing_rate"], 0.0)

    def test_zero_dephasing_lands_on_bound(self):
        values, _ = synthesize_fit_data(cell(dephasing_hz=0.0), FREQS)
        result = fit(FitProblem(FREQS, values, cell(dephasing_hz=1e3)))
        self.assertLess(result.residual_norm, 1e-12)
        self.assertLess(result.values["dephasing_rate"], 1e-3)
        self.assertGreaterEqual(result.values["dephasing_rate"], 0.0)

    def test_point_order_does_not_matter(self):
        values, sigma = synthesize_fit_data(cell(), FREQS, noise_fraction=0.01, seed=3)
        order = np.random.default_rng(4).permutation(FREQS.size)
        a = fit(FitProblem(FREQS, values, cell(dephasing_hz=2e3), sigma=sigma))
        b = fit(FitProblem(FREQS[order], values[order], cell(dephasing_hz=2e3), sigma=sigma[order]))
        self.assertAlmostEqual(a.values["dephasing_rate"] / b.values["dephasing_rate"], 1.0, delta=1e-6)

    def test_two_parameter_closure(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            truth = cell(group_delay=rng.uniform(0.2e-6, 1e-6), dephasing_hz=rng.uniform(1e3, 1e4))
            values, _ = synthesize_fit_data(truth, FREQS)
            start = truth.replace(dephasing_rate=truth.dephasing_rate * rng.uniform(0.7, 1.3),
                                  optical_depth_rate=truth.optical_depth_rate * rng.uniform(0.7, 1.3))
            result = fit(FitProblem(FREQS, values, start, free=("dephasing_rate", "optical_depth_rate")))
            for name in ("dephasing_rate", "optical_depth_rate"):
                with self.subTest(name=name):
                    self.assertAlmostEqual(result.values[name] / getattr(truth, name), 1.0, delta=5e-3)

    def test_degenerate_combination(self):
        freqs = np.zeros(4)
        values = model_values(cell(), freqs, CurveKind.BENCHMARK_CV)
        problem = FitProblem(freqs, values, cell(dephasing_hz=2e3), free=("dephasing_rate", "optical_depth_rate"))
        with self.assertRaises(DegenerateFitError) as ctx:
            fit(problem)
        self.assertEqual(sorted(ctx.exception.combination), ["dephasing_rate", "optical_depth_rate"])

    def test_iteration_cap(self):
        values, _ = synthesize_fit_data(cell(), FREQS)
        with self.assertRaises(FitConvergenceError) as ctx:
            fit(FitProblem(FREQS, values, cell(dephasing_hz=1e3)), max_iterations=1)
        self.assertEqual(len(ctx.exception.trace), 1)

    def test_signal_transfer_kind(self):
        values, _ = synthesize_fit_data(cell(), FREQS, kind=CurveKind.BENCHMARK_TS)
        result = fit(FitProblem(FREQS, values, cell(dephasing_hz=1e3), kind=CurveKind.BENCHMARK_TS))
        self.assertAlmostEqual(result.values["dephasing_rate"] / (TWO_PI * 4e3), 1.0, delta=1e-3)
        curve = result.curve(FREQS)
        self.assertEqual(curve.kind, CurveKind.BENCHMARK_TS)
        np.testing.assert_allclose(curve.values, values, atol=1e-6)
        self.assertEqual(set(result.summary()), {"kind", "values", "uncertainties", "residual_norm",
                                                 "initial_residual_norm", "iterations"})


class TestFitData(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_bundled_data(self):
        freqs, values, sigma = read_fit_data(BUNDLED_DATA)
        self.assertEqual(freqs.size, 41)
        self.assertEqual(sigma.size, 41)
        result = fit(FitProblem(freqs, values, cell(dephasing_hz=1e3), sigma=sigma,
                                bounds={"dephasing_rate": (0.0, TWO_PI * 1e6)}))
        self.assertAlmostEqual(result.values["dephasing_rate"] / (TWO_PI * 4e3), 1.0, delta=0.1)

    def test_two_columns(self):
        path = os.path.join(self.test_dir, "data.csv")
        with open(path, "w") as f:
            f.write("freq_hz,value\n0,0.1\n1000,0.2\n\n")
        freqs, values, sigma = read_fit_data(path)
        np.testing.assert_array_equal(freqs, [0.0, 1000.0])
        self.assertIsNone(sigma)

    def test_malformed(self):
        path = os.path.join(self.test_dir, "bad.csv")
        for content in ("f,v\n0,1\n", "freq_hz,value\n0,abc\n", "freq_hz,value\n0,1,2\n"):
            with open(path, "w") as f:
                f.write(content)
            with self.subTest(content=content):
                with self.assertRaises(ParameterError):
                    read_fit_data(path)


if __name__ == '__main__':
    unittest.main()
