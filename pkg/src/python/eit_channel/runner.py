import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import OutputError
from .fileio import atomic_write, check_writable
from .fit import FitProblem, fit, read_fit_data, synthesize_fit_data
from .logger import ConsoleLogger, ILogger, LogLevel
from .medium import EitParameters, group_delay
from .metrics import (CurveKind, MetricCurve, average_curves, benchmark_curves, conditional_variance_curve,
                      conditional_variance_empirical, fixed_gain_curves, signal_transfer_curve,
                      signal_transfer_empirical, write_curve_csv)
from .quadrature import NoiseInjection, Quadrature, excess_noise_db
from .scenario import AnalysisKind, DelayConfig, Scenario, scenario_to_dict
from .series_io import write_series_binary, write_series_csv
from .synth import (SpectrumEstimate, TimeSeries, add_tones, correlation_width, cross_correlate,
                    estimate_cross_spectrum, estimate_delay, estimate_psd, simulate_channel, synth_bandlimited_noise,
                    synth_white_noise)
from .units import rad_to_hz, to_db

MANIFEST = "manifest.json"
_SEED_MASK = 0x7FFF_FFFF_FFFF_FFFF


def trial_seeds(seed: int, key: Sequence[int], count: int) -> List[int]:
    """Per-trial seeds for one (medium, quadrature, ...) stream.

    Spawned children of the scenario seed, so a trial's records do not
    depend on how many workers run them.
    """
    root = np.random.SeedSequence([int(seed)] + [int(k) for k in key])
    return [int(child.generate_state(1, dtype=np.uint64)[0]) & _SEED_MASK for child in root.spawn(count)]


def _num(value) -> Optional[float]:
    """JSON-safe float; NaN and infinities become null."""
    value = float(value)
    return value if np.isfinite(value) else None


def _curve_summary(curve: MetricCurve) -> Dict[str, Any]:
    valid = curve.values[curve.valid]
    summary = {
        "points": len(curve),
        "invalid_bins": int(np.count_nonzero(~curve.valid)),
        "min": _num(valid.min()) if valid.size else None,
        "max": _num(valid.max()) if valid.size else None,
        "first": _num(curve.values[0]),
        "last": _num(curve.values[-1]),
    }
    if curve.stderr is not None:
        summary["max_stderr"] = _num(np.nanmax(curve.stderr)) if curve.stderr.size else None
    return summary


def _spectrum_summary(spec: SpectrumEstimate) -> Dict[str, Any]:
    return {
        "rbw_hz": spec.rbw,
        "vbw_hz": spec.vbw,
        "averages": spec.averages,
        "bin_width_hz": spec.bin_width,
        "sample_rate_hz": spec.sample_rate,
    }


def _band(curve: MetricCurve, start_hz: float, stop_hz: float) -> MetricCurve:
    keep = (curve.frequencies >= start_hz) & (curve.frequencies <= stop_hz)
    pick = lambda v: None if v is None else v[keep]
    return MetricCurve(curve.frequencies[keep], curve.values[keep], curve.kind, curve.quadrature,
                       g_opt=pick(curve.g_opt), tau_opt=pick(curve.tau_opt), stderr=pick(curve.stderr),
                       label=curve.label)


@dataclass
class ResultSet:
    """Everything a scenario run produced, keyed by output file stem."""

    scenario: Scenario
    curves: Dict[str, MetricCurve] = field(default_factory=dict)
    tables: Dict[str, str] = field(default_factory=dict)
    series: Dict[str, TimeSeries] = field(default_factory=dict)
    summaries: Dict[str, Any] = field(default_factory=dict)


class ScenarioRunner:
    """Executes one validated Scenario.

    Monte-Carlo trials go through a thread pool of ``monte_carlo.workers``
    threads; results are collected in trial order, so output does not
    depend on scheduling.
    """

    def __init__(self, scenario: Scenario, logger: Optional[ILogger] = None):
        self.scenario = scenario
        self.logger = logger or ConsoleLogger()
        self.injection: NoiseInjection = scenario.injection.to_injection()
        self.media: Dict[str, EitParameters] = {m.name: m.to_parameters() for m in scenario.media}
        self._analyser: Optional[Dict[str, Any]] = None

    def run(self) -> ResultSet:
        s = self.scenario
        self.logger.log(LogLevel.INFO, "Runner", f"Scenario '{s.name}' ({s.analysis.value}), seed {s.seed}")
        results = ResultSet(scenario=s)
        handler = {
            AnalysisKind.SWEEP_CV: self._sweep_cv,
            AnalysisKind.SWEEP_TS: self._sweep_ts,
            AnalysisKind.DELAY_EXPERIMENT: self._delay,
            AnalysisKind.CORRELATION: self._delay,
            AnalysisKind.FIT: self._fit,
            AnalysisKind.NOISE_BUDGET: self._noise_budget,
        }[s.analysis]
        handler(results)
        if self._analyser is not None:
            results.summaries["spectrum"] = self._analyser
        return results

    # -- helpers --------------------------------------------------------------

    def _map_trials(self, fn: Callable[[int], Any], seeds: List[int]) -> List[Any]:
        workers = self.scenario.monte_carlo.workers
        if workers <= 1 or len(seeds) <= 1:
            return [fn(seed) for seed in seeds]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, seeds))

    def _input_signal(self, seed: int, n: int) -> Optional[TimeSeries]:
        """Classical excess on the input: white noise above vacuum plus configured tones."""
        s, mc = self.scenario, self.scenario.monte_carlo
        signal = None
        if mc.input_variance > 1.0:
            signal = synth_white_noise(mc.input_variance - 1.0, mc.sample_rate_hz, n, seed)
        if s.tones is not None:
            base = signal or TimeSeries(np.zeros(n), mc.sample_rate_hz, seed)
            signal = add_tones(base, s.tones.frequencies_hz, s.tones.amplitude)
        return signal

    def _psd(self, series: TimeSeries) -> SpectrumEstimate:
        sp = self.scenario.spectrum
        spec = estimate_psd(series, sp.rbw_hz, sp.averages)
        if self._analyser is None:
            self._analyser = _spectrum_summary(spec)
        return spec

    def _record(self, results: ResultSet, key: str, curve: MetricCurve):
        results.curves[key] = curve
        results.summaries.setdefault("curves", {})[key] = _curve_summary(curve)

    def _streams(self):
        for i, m in enumerate(self.scenario.media):
            for j, q in enumerate(self.scenario.quadratures):
                yield i, m.name, j, q

    # -- sweeps ---------------------------------------------------------------

    def _sweep_cv(self, results: ResultSet):
        s = self.scenario
        freqs = s.grid.frequencies()
        for i, name, j, q in self._streams():
            params = self.media[name]
            self._record(results, f"conditional_variance_{name}_{q.value}",
                         conditional_variance_curve(params, freqs, self.injection, 1.0, q, label=name))
            cv_bench, _ = benchmark_curves(params, freqs, q, label=name)
            self._record(results, f"benchmark_cv_{name}_{q.value}", cv_bench)
            if s.fixed_gain is not None:
                for curve in fixed_gain_curves(params, freqs, self.injection, s.fixed_gain.input_variance,
                                               s.fixed_gain.optimise_at_hz, q, label=name):
                    self._record(results, f"{curve.kind.value}_{name}_{q.value}", curve)
            if s.monte_carlo is not None:
                curve = self._monte_carlo_cv(params, q, trial_seeds(s.seed, (i, j), s.monte_carlo.trials))
                self._record(results, f"conditional_variance_mc_{name}_{q.value}",
                             _band(curve, s.grid.start_hz, s.grid.stop_hz))

    def _monte_carlo_cv(self, params: EitParameters, q: Quadrature, seeds: List[int]) -> MetricCurve:
        mc, sp = self.scenario.monte_carlo, self.scenario.spectrum
        n = mc.n_samples

        def trial(seed: int) -> MetricCurve:
            signal_seed, channel_seed = trial_seeds(seed, (), 2)
            a, b = simulate_channel(params, self.injection, mc.sample_rate_hz, n, channel_seed, q,
                                    self._input_signal(signal_seed, n))
            return conditional_variance_empirical(self._psd(a), self._psd(b),
                                                  estimate_cross_spectrum(a, b, sp.rbw_hz, sp.averages), q)

        self.logger.log(LogLevel.INFO, "Runner", f"{len(seeds)} trial(s) of {n} samples ({q.value})")
        return average_curves(self._map_trials(trial, seeds))

    def _sweep_ts(self, results: ResultSet):
        s = self.scenario
        freqs = s.grid.frequencies()
        for i, name, j, q in self._streams():
            params = self.media[name]
            self._record(results, f"signal_transfer_{name}_{q.value}",
                         signal_transfer_curve(params, freqs, self.injection, 1.0, q, label=name))
            _, ts_bench = benchmark_curves(params, freqs, q, label=name)
            self._record(results, f"benchmark_ts_{name}_{q.value}", ts_bench)
            if s.monte_carlo is not None:
                tones = freqs[freqs > 0]
                curve = self._monte_carlo_ts(params, q, tones, trial_seeds(s.seed, (i, j), s.monte_carlo.trials))
                self._record(results, f"signal_transfer_mc_{name}_{q.value}", curve)

    def _monte_carlo_ts(self, params: EitParameters, q: Quadrature, tones: np.ndarray,
                        seeds: List[int]) -> MetricCurve:
        """Modulation tones at every grid frequency, SNR read off each spectrum."""
        s, mc = self.scenario, self.scenario.monte_carlo
        n = mc.n_samples
        amplitude = s.tones.amplitude if s.tones is not None else 10.0

        def trial(seed: int) -> MetricCurve:
            modulation = add_tones(TimeSeries(np.zeros(n), mc.sample_rate_hz, seed), tones, amplitude)
            a, b = simulate_channel(params, self.injection, mc.sample_rate_hz, n, seed, q, modulation)
            return signal_transfer_empirical(self._psd(a), self._psd(b), tones, q)

        return average_curves(self._map_trials(trial, seeds))

    # -- time domain ----------------------------------------------------------

    def _delay(self, results: ResultSet):
        s, mc = self.scenario, self.scenario.monte_carlo
        d = s.delay or DelayConfig()
        q = s.quadratures[0]
        summaries = results.summaries.setdefault("delay", {})
        for i, m in enumerate(s.media):
            params = self.media[m.name]
            seeds = trial_seeds(s.seed, (i,), mc.trials)

            def trial(seed: int):
                noise_seed, channel_seed = trial_seeds(seed, (), 2)
                probe = synth_bandlimited_noise(d.noise_bandwidth_hz, mc.sample_rate_hz, mc.duration_s,
                                                noise_seed, d.noise_level, d.rolloff)
                if s.tones is not None:
                    probe = add_tones(probe, s.tones.frequencies_hz, s.tones.amplitude)
                a, b = simulate_channel(params, self.injection, mc.sample_rate_hz, len(probe), channel_seed, q,
                                        probe)
                return a, b, estimate_delay(a, b, d.min_peak)

            trials = self._map_trials(trial, seeds)
            delays = np.array([t[2] for t in trials])
            a, b, _ = trials[0]
            lags, cross = cross_correlate(a, b, d.max_lag_s)
            _, auto = cross_correlate(a, a, d.max_lag_s)
            summaries[m.name] = {
                "estimated_delay_s": _num(delays.mean()),
                "delay_spread_s": _num(delays.std(ddof=1)) if delays.size > 1 else 0.0,
                "group_delay_s": _num(group_delay(params, 0.0)),
                "zero_dephasing_delay_s": _num(params.zero_dephasing_delay),
                "sample_period_s": 1.0 / mc.sample_rate_hz,
                "cross_peak": _num(cross.max()),
                "cross_width_s": _num(correlation_width(lags, cross)),
                "auto_width_s": _num(correlation_width(lags, auto)),
            }
            self.logger.log(LogLevel.INFO, "Runner",
                            f"{m.name}: delay {delays.mean() * 1e6:.3f} us "
                            f"(model {params.zero_dephasing_delay * 1e6:.3f} us)")
            if s.analysis is AnalysisKind.CORRELATION:
                results.tables[f"correlation_{m.name}.csv"] = _correlation_csv(lags, auto, cross)
            if s.output.timeseries != "none":
                results.series[f"input_{m.name}"] = a
                results.series[f"output_{m.name}"] = b

    # -- noise budget ---------------------------------------------------------

    def _noise_budget(self, results: ResultSet):
        s, mc = self.scenario, self.scenario.monte_carlo
        budget = results.summaries.setdefault("noise_budget", {})
        for i, name, j, q in self._streams():
            entry = {"analytic_db": _num(excess_noise_db(self.injection, q))}
            if mc is not None:
                params = self.media[name]
                n = mc.n_samples

                def trial(seed: int) -> MetricCurve:
                    _, b = simulate_channel(params, self.injection, mc.sample_rate_hz, n, seed, q)
                    spec = self._psd(b)
                    return MetricCurve(spec.frequencies, spec.psd, CurveKind.OUTPUT_SPECTRUM, q, label=name)

                curve = average_curves(self._map_trials(trial, trial_seeds(s.seed, (i, j), mc.trials)))
                if s.grid is not None:
                    curve = _band(curve, s.grid.start_hz, s.grid.stop_hz)
                else:
                    curve = _band(curve, curve.frequencies[1], curve.frequencies[-2])
                level = float(np.mean(curve.values))
                entry["monte_carlo_db"] = _num(to_db(level))
                entry["monte_carlo_variance"] = _num(level)
                self._record(results, f"output_spectrum_mc_{name}_{q.value}", curve)
            budget[f"{name}_{q.value}"] = entry
            self.logger.log(LogLevel.INFO, "Runner", f"{name} {q.value}: excess {entry['analytic_db']:.3f} dB")

    # -- fit ------------------------------------------------------------------

    def _fit(self, results: ResultSet):
        s = self.scenario
        f = s.fit
        base = self.media[f.medium]
        if f.data is not None:
            freqs, values, sigma = read_fit_data(s.resolve_path(f.data))
        else:
            freqs = s.grid.frequencies()
            values, sigma = synthesize_fit_data(self.media[f.truth], freqs, CurveKind(f.kind), f.noise_fraction,
                                                trial_seeds(s.seed, (), 1)[0])
        problem = FitProblem(freqs, values, base, free=f.internal_free(), sigma=sigma, kind=CurveKind(f.kind),
                             initial=f.internal_initial(), bounds=f.internal_bounds())
        result = fit(problem)
        summary = result.summary()
        summary["config_values"] = {
            name: _num(rad_to_hz(result.values[internal]) if name.endswith("_hz") else result.values[internal])
            for name, internal in zip(f.free, f.internal_free())
        }
        summary["config_uncertainties"] = {
            name: _num(rad_to_hz(result.uncertainties[internal]) if name.endswith("_hz")
                       else result.uncertainties[internal])
            for name, internal in zip(f.free, f.internal_free())
        }
        results.summaries["fit"] = summary
        order = np.argsort(freqs, kind="stable")
        self._record(results, f"fit_{f.kind}_{f.medium}", result.curve(np.asarray(freqs)[order], label=f.medium))
        self.logger.log(LogLevel.INFO, "Runner",
                        f"fit converged in {result.iterations} iteration(s), residual {result.residual_norm:.4g}")


def _correlation_csv(lags: np.ndarray, auto: np.ndarray, cross: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lag_s", "auto", "cross"])
    for row in zip(lags, auto, cross):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def emit_tables(results: ResultSet, path: str) -> List[str]:
    """Write every result into ``path``; the manifest goes last.

    Each file is written to a temp name and renamed, so an interrupted run
    never leaves a truncated CSV behind. Returns the file names written.
    """
    written = []
    for key, curve in results.curves.items():
        write_curve_csv(curve, os.path.join(path, f"{key}.csv"))
        written.append(f"{key}.csv")
    for name, text in results.tables.items():
        atomic_write(os.path.join(path, name), text)
        written.append(name)
    fmt = results.scenario.output.timeseries
    for key, series in results.series.items():
        if fmt == "binary":
            write_series_binary(series, os.path.join(path, f"{key}.eits"))
            written.append(f"{key}.eits")
        else:
            write_series_csv(series, os.path.join(path, f"{key}.csv"))
            written.append(f"{key}.csv")
    manifest = {
        "scenario": scenario_to_dict(results.scenario),
        "outputs": sorted(written),
        "results": results.summaries,
    }
    atomic_write(os.path.join(path, MANIFEST), json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return sorted(written) + [MANIFEST]


def run_scenario(scenario: Scenario, out_dir: Optional[str] = None,
                 logger: Optional[ILogger] = None) -> ResultSet:
    """Validate the output location, run, then emit."""
    target = out_dir or scenario.output.directory
    try:
        check_writable(target)
    except OSError as e:
        raise OutputError(f"Output directory {target} is not writable: {e}")
    results = ScenarioRunner(scenario, logger).run()
    try:
        emit_tables(results, target)
    except OSError as e:
        raise OutputError(f"Writing results to {target} failed: {e}")
    return results
