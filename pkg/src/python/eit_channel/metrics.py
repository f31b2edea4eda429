"""
Figures of merit for the EIT delay line.

Conditional variance
    V(w) = min over G, tau of <|X_out - G e^{i w tau} X_in|^2>
         = S_oo - |S_oi|^2 / S_ii          (closed-form minimiser)
with S_oi = <X_out X_in*>. The direct (G, tau) minimisation is kept as a
validation path.

Signal transfer
    T(w) = SNR_out / SNR_in.

Beamsplitter benchmark
    a passive loss of the same eta gives V = 1 - eta and T = eta.
"""

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .errors import ContractViolationError, InvalidParametersError, ParameterError
from .fileio import atomic_write
from .medium import ChannelResponse, EitParameters, channel_response
from .quadrature import NoiseInjection, Quadrature
from .synth import CrossSpectrum, SpectrumEstimate
from .units import TWO_PI, hz_to_rad

CSV_HEADER = ["freq_hz", "value", "g_opt", "tau_opt_s", "kind", "quadrature"]


class CurveKind(str, Enum):
    CONDITIONAL_VARIANCE = "conditional_variance"
    SIGNAL_TRANSFER = "signal_transfer"
    BENCHMARK_CV = "benchmark_cv"
    BENCHMARK_TS = "benchmark_ts"
    CONDITIONAL_VARIANCE_FIXED = "conditional_variance_fixed"
    OUTPUT_SPECTRUM = "output_spectrum"
    REFERENCE_SPECTRUM = "reference_spectrum"


_UNIT_INTERVAL = (CurveKind.BENCHMARK_CV, CurveKind.BENCHMARK_TS)


@dataclass(frozen=True, eq=False)
class MetricCurve:
    """Frequency-indexed metric values; NaN marks an invalid bin (a gap)."""

    frequencies: np.ndarray
    values: np.ndarray
    kind: CurveKind
    quadrature: Quadrature
    g_opt: Optional[np.ndarray] = None
    tau_opt: Optional[np.ndarray] = None
    stderr: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        for name in ("frequencies", "values", "g_opt", "tau_opt", "stderr"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.atleast_1d(np.asarray(v, dtype=float)))
        object.__setattr__(self, "kind", CurveKind(self.kind))
        object.__setattr__(self, "quadrature", Quadrature(self.quadrature))
        if self.values.shape != self.frequencies.shape:
            raise InvalidParametersError("values and frequencies differ in length")
        finite = self.values[self.valid]
        if np.any(finite < 0):
            raise InvalidParametersError(f"{self.kind.value} values must be >= 0")
        if self.kind in _UNIT_INTERVAL and np.any(finite > 1):
            raise InvalidParametersError(f"{self.kind.value} values must lie in [0, 1]")

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def __len__(self) -> int:
        return self.frequencies.size


def _fmt(value) -> str:
    if value is None or not np.isfinite(value):
        return ""
    return repr(float(value))


def curve_to_csv(curve: MetricCurve) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for i, f in enumerate(curve.frequencies):
        writer.writerow([
            _fmt(f),
            _fmt(curve.values[i]),
            _fmt(None if curve.g_opt is None else curve.g_opt[i]),
            _fmt(None if curve.tau_opt is None else curve.tau_opt[i]),
            curve.kind.value,
            curve.quadrature.value,
        ])
    return buf.getvalue()


def write_curve_csv(curve: MetricCurve, path: str):
    atomic_write(path, curve_to_csv(curve))


def average_curves(curves: Sequence[MetricCurve]) -> MetricCurve:
    """Trial mean with the standard error of the mean per bin."""
    if not curves:
        raise ParameterError("no curves to average")
    stack = np.vstack([c.values for c in curves])
    mean = stack.mean(axis=0)
    stderr = stack.std(axis=0, ddof=1) / np.sqrt(len(curves)) if len(curves) > 1 else np.zeros_like(mean)
    mean_or_none = lambda name: None if getattr(curves[0], name) is None else \
        np.vstack([getattr(c, name) for c in curves]).mean(axis=0)
    first = curves[0]
    return MetricCurve(first.frequencies, mean, first.kind, first.quadrature,
                       g_opt=mean_or_none("g_opt"), tau_opt=mean_or_none("tau_opt"),
                       stderr=stderr, label=first.label)


# -----------------------------------------------------------------------------
# Analytic channel metrics
# -----------------------------------------------------------------------------

def _check_v_in(v_in):
    if np.any(np.asarray(v_in) < 1.0):
        raise ParameterError("v_in must be >= 1 (QNL units)")


def _output_variance(response: ChannelResponse, inj: NoiseInjection, v_in, quadrature: Quadrature):
    eta = np.asarray(response.intensity_transmissivity, dtype=float)
    return 1.0 + eta * (v_in - 1.0) + inj.added_variance_at(quadrature, eta)


def conditional_variance_analytic(response: ChannelResponse, inj: NoiseInjection, v_in: float = 1.0,
                                  quadrature: Quadrature = Quadrature.AMPLITUDE):
    """Closed-form minimum of the conditional variance for the Gaussian channel model.

    V = V_out - |C_io|^2 / V_in with C_io = sqrt(eta) V_in, i.e. 1 - eta plus
    the injected excess.
    """
    _check_v_in(v_in)
    eta = np.asarray(response.intensity_transmissivity, dtype=float)
    c_io = np.sqrt(eta) * v_in
    value = _output_variance(response, inj, v_in, quadrature) - c_io ** 2 / v_in
    value = np.maximum(value, 0.0)
    return value.item() if value.ndim == 0 else value


def signal_transfer(snr_in, snr_out):
    snr_in = np.asarray(snr_in, dtype=float)
    if np.any(snr_in == 0):
        raise ParameterError("snr_in must be > 0")
    value = np.asarray(snr_out, dtype=float) / snr_in
    return value.item() if value.ndim == 0 else value


def signal_transfer_model(response: ChannelResponse, inj: NoiseInjection, v_in: float = 1.0,
                          quadrature: Quadrature = Quadrature.AMPLITUDE):
    """T = eta V_in / V_out: signal power scales by eta, noise goes to V_out."""
    _check_v_in(v_in)
    eta = np.asarray(response.intensity_transmissivity, dtype=float)
    value = eta * v_in / _output_variance(response, inj, v_in, quadrature)
    return value.item() if value.ndim == 0 else value


def benchmark_beamsplitter(response: ChannelResponse) -> Tuple:
    """(V_limit, T_limit) = (1 - eta, eta) of a beamsplitter matched per frequency."""
    eta = response.intensity_transmissivity
    return 1.0 - eta, eta


def _grid_response(params: EitParameters, frequencies_hz) -> Tuple[np.ndarray, ChannelResponse]:
    freqs = np.atleast_1d(np.asarray(frequencies_hz, dtype=float))
    return freqs, channel_response(params, hz_to_rad(freqs))


def _delay_from_phase(phase: np.ndarray, omega: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    tau = np.array(fallback, dtype=float, copy=True)
    nz = omega != 0
    tau[nz] = phase[nz] / omega[nz]
    return tau


def conditional_variance_curve(params: EitParameters, frequencies_hz, inj: NoiseInjection, v_in: float = 1.0,
                               quadrature: Quadrature = Quadrature.AMPLITUDE, label: str = "") -> MetricCurve:
    freqs, response = _grid_response(params, frequencies_hz)
    omega = hz_to_rad(freqs)
    values = conditional_variance_analytic(response, inj, v_in, quadrature)
    tau = _delay_from_phase(np.asarray(response.phase), omega, np.asarray(response.group_delay))
    return MetricCurve(freqs, values, CurveKind.CONDITIONAL_VARIANCE, quadrature,
                       g_opt=np.sqrt(response.intensity_transmissivity), tau_opt=tau, label=label)


def signal_transfer_curve(params: EitParameters, frequencies_hz, inj: NoiseInjection, v_in: float = 1.0,
                          quadrature: Quadrature = Quadrature.AMPLITUDE, label: str = "") -> MetricCurve:
    freqs, response = _grid_response(params, frequencies_hz)
    values = signal_transfer_model(response, inj, v_in, quadrature)
    return MetricCurve(freqs, values, CurveKind.SIGNAL_TRANSFER, quadrature, label=label)


def benchmark_curves(params: EitParameters, frequencies_hz, quadrature: Quadrature = Quadrature.AMPLITUDE,
                     label: str = "") -> Tuple[MetricCurve, MetricCurve]:
    freqs, response = _grid_response(params, frequencies_hz)
    v_limit, t_limit = benchmark_beamsplitter(response)
    return (MetricCurve(freqs, v_limit, CurveKind.BENCHMARK_CV, quadrature, label=label),
            MetricCurve(freqs, t_limit, CurveKind.BENCHMARK_TS, quadrature, label=label))


def conditional_variance_fixed_gain(response: ChannelResponse, inj: NoiseInjection, v_in: float,
                                    gain: float, delay: float, quadrature: Quadrature = Quadrature.AMPLITUDE):
    """<|X_out - G e^{i w tau} X_in|^2> with G and tau held fixed across frequency."""
    _check_v_in(v_in)
    eta = np.asarray(response.intensity_transmissivity, dtype=float)
    omega = np.asarray(response.frequency, dtype=float)
    s_oi = np.sqrt(eta) * np.exp(1j * np.asarray(response.phase)) * v_in
    value = (_output_variance(response, inj, v_in, quadrature)
             - 2.0 * gain * np.real(np.exp(-1j * omega * delay) * s_oi)
             + gain ** 2 * v_in)
    value = np.maximum(value, 0.0)
    return value.item() if value.ndim == 0 else value


def fixed_gain_curves(params: EitParameters, frequencies_hz, inj: NoiseInjection, v_in: float,
                      optimise_at_hz: float, quadrature: Quadrature = Quadrature.AMPLITUDE,
                      label: str = "") -> List[MetricCurve]:
    """Output spectrum, gain-scaled reference and fixed-(G, tau) conditional variance.

    G and tau are the optimum at ``optimise_at_hz``; the conditional variance
    is smallest there, where the two spectra cross for a strongly modulated input.
    """
    freqs, response = _grid_response(params, frequencies_hz)
    at = channel_response(params, hz_to_rad(optimise_at_hz))
    gain = float(np.sqrt(at.intensity_transmissivity))
    delay = float(at.phase / at.frequency) if at.frequency != 0 else float(at.group_delay)
    cv = conditional_variance_fixed_gain(response, inj, v_in, gain, delay, quadrature)
    n = freqs.size
    return [
        MetricCurve(freqs, _output_variance(response, inj, v_in, quadrature), CurveKind.OUTPUT_SPECTRUM,
                    quadrature, label=label),
        MetricCurve(freqs, np.full(n, gain ** 2 * v_in), CurveKind.REFERENCE_SPECTRUM, quadrature, label=label),
        MetricCurve(freqs, cv, CurveKind.CONDITIONAL_VARIANCE_FIXED, quadrature,
                    g_opt=np.full(n, gain), tau_opt=np.full(n, delay), label=label),
    ]


# -----------------------------------------------------------------------------
# Empirical metrics from spectra
# -----------------------------------------------------------------------------

def _check_aligned(*grids: np.ndarray):
    first = grids[0]
    for g in grids[1:]:
        if g.shape != first.shape or not np.allclose(g, first, rtol=0, atol=1e-9):
            raise ContractViolationError("spectra are not on the same frequency grid")


def conditional_variance_empirical(s_in: SpectrumEstimate, s_out: SpectrumEstimate, s_cross: CrossSpectrum,
                                   quadrature: Quadrature = Quadrature.AMPLITUDE, label: str = "") -> MetricCurve:
    _check_aligned(s_in.frequencies, s_out.frequencies, s_cross.frequencies)
    s_ii = s_in.psd
    valid = np.isfinite(s_ii) & (s_ii > 0)
    values = np.full(s_ii.shape, np.nan)
    gain = np.full(s_ii.shape, np.nan)
    tau = np.full(s_ii.shape, np.nan)

    s_oi = s_cross.values[valid]
    values[valid] = np.maximum(s_out.psd[valid] - np.abs(s_oi) ** 2 / s_ii[valid], 0.0)
    gain[valid] = np.abs(s_oi) / s_ii[valid]
    omega = TWO_PI * s_in.frequencies[valid]
    tau[valid] = _delay_from_phase(np.angle(s_oi), omega, np.zeros(omega.shape))
    return MetricCurve(s_in.frequencies, values, CurveKind.CONDITIONAL_VARIANCE, quadrature,
                       g_opt=gain, tau_opt=tau, label=label)


def minimise_eq2(s_ii: float, s_oo: float, s_oi: complex, omega: float,
                 gain_points: int = 201, phase_points: int = 361) -> Tuple[float, float, float]:
    """Direct minimisation of <|X_out - G e^{i w tau} X_in|^2> over (G, tau).

    Coarse grid in (G, w tau), then Nelder-Mead refinement. Returns
    (V, G, tau); tau is 0 at w = 0.
    """
    if s_ii <= 0:
        raise ParameterError("input power must be > 0")

    def objective(x):
        g, theta = x
        return s_oo - 2.0 * g * np.real(np.exp(-1j * theta) * s_oi) + g * g * s_ii

    g_max = 2.0 * np.sqrt(max(s_oo, 0.0) / s_ii) + 1e-12
    gg, tt = np.meshgrid(np.linspace(0.0, g_max, gain_points),
                         np.linspace(-np.pi, np.pi, phase_points), indexing="ij")
    surface = s_oo - 2.0 * gg * np.real(np.exp(-1j * tt) * s_oi) + gg * gg * s_ii
    k = np.unravel_index(np.argmin(surface), surface.shape)
    start = np.array([gg[k], tt[k]])
    best = optimize.minimize(objective, start, method="Nelder-Mead",
                             options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    x = best.x if best.fun <= surface[k] else start
    value = float(min(best.fun, surface[k]))
    g, theta = float(x[0]), float(np.angle(np.exp(1j * x[1])))
    return value, g, (theta / omega if omega != 0 else 0.0)


def conditional_variance_bruteforce(s_in: SpectrumEstimate, s_out: SpectrumEstimate, s_cross: CrossSpectrum,
                                    quadrature: Quadrature = Quadrature.AMPLITUDE, label: str = "") -> MetricCurve:
    """Validation path: ``minimise_eq2`` per bin."""
    _check_aligned(s_in.frequencies, s_out.frequencies, s_cross.frequencies)
    n = s_in.frequencies.size
    values, gain, tau = np.full(n, np.nan), np.full(n, np.nan), np.full(n, np.nan)
    for i in range(n):
        if not s_in.psd[i] > 0:
            continue
        values[i], gain[i], tau[i] = minimise_eq2(s_in.psd[i], s_out.psd[i], s_cross.values[i],
                                                  TWO_PI * s_in.frequencies[i])
    return MetricCurve(s_in.frequencies, values, CurveKind.CONDITIONAL_VARIANCE, quadrature,
                       g_opt=gain, tau_opt=tau, label=label)


def measure_snr(spectrum: SpectrumEstimate, f_mod: float, exclusion_bins: int = 3, noise_bins: int = 20) -> float:
    """Tone power over the local noise floor.

    The floor is the mean psd of ``noise_bins`` bins on each side beyond
    ``exclusion_bins``; the tone power is the floor-subtracted psd summed
    over the excluded bins.
    """
    freqs = spectrum.frequencies
    k = int(np.argmin(np.abs(freqs - f_mod)))
    offsets = np.arange(exclusion_bins + 1, exclusion_bins + noise_bins + 1)
    idx = np.concatenate([k - offsets, k + offsets])
    idx = idx[(idx > 0) & (idx < freqs.size)]
    if idx.size == 0:
        raise ParameterError(f"no noise bins around {f_mod} Hz")
    noise = float(np.mean(spectrum.psd[idx]))
    if noise <= 0:
        raise ParameterError(f"noise floor at {f_mod} Hz is zero")
    lo, hi = max(k - exclusion_bins, 1), min(k + exclusion_bins + 1, freqs.size)
    tone = float(np.sum(spectrum.psd[lo:hi] - noise))
    return max(tone, 0.0) / noise


def signal_transfer_empirical(s_in: SpectrumEstimate, s_out: SpectrumEstimate, modulation_hz: Sequence[float],
                              quadrature: Quadrature = Quadrature.AMPLITUDE, exclusion_bins: int = 3,
                              noise_bins: int = 20, label: str = "") -> MetricCurve:
    _check_aligned(s_in.frequencies, s_out.frequencies)
    freqs = np.asarray(modulation_hz, dtype=float)
    values = np.array([
        signal_transfer(measure_snr(s_in, f, exclusion_bins, noise_bins),
                        measure_snr(s_out, f, exclusion_bins, noise_bins))
        for f in freqs
    ])
    return MetricCurve(freqs, values, CurveKind.SIGNAL_TRANSFER, quadrature, label=label)
