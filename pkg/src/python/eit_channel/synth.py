"""
Time-domain engine: seeded noise synthesis, FFT filtering through the EIT
channel, spectral estimation and correlation-based delay measurement.

Records hold one quadrature in QNL units. Spectra use a QNL-relative
normalisation: white noise of variance V reads psd = V in every bin, and
``SpectrumEstimate.density`` converts back to a one-sided density for
Parseval checks.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from .errors import NoDelayFoundError, ParameterError
from .medium import EitParameters, channel_response
from .quadrature import NoiseInjection, Quadrature
from .units import TWO_PI

logger = logging.getLogger("eit_channel.synth")

DEFAULT_SAMPLE_RATE = 4.0e6
DEFAULT_ROLLOFF = 0.05
LOCKING_TONES_HZ = (87.0e3, 174.0e3)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    samples: np.ndarray
    sample_rate: float
    seed: Optional[int] = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ParameterError("samples must be a non-empty 1-D array")
        if not self.sample_rate > 0:
            raise ParameterError("sample_rate must be > 0")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    def padded(self) -> "TimeSeries":
        """Zero-pad to the next power of two."""
        n = next_power_of_two(self.samples.size)
        if n == self.samples.size:
            return self
        return TimeSeries(np.pad(self.samples, (0, n - self.samples.size)), self.sample_rate, self.seed)


@dataclass(frozen=True, eq=False)
class SpectrumEstimate:
    frequencies: np.ndarray
    psd: np.ndarray
    rbw: float
    averages: int
    sample_rate: float

    def __post_init__(self):
        object.__setattr__(self, "frequencies", np.asarray(self.frequencies, dtype=float))
        object.__setattr__(self, "psd", np.asarray(self.psd, dtype=float))
        if self.psd.shape != self.frequencies.shape:
            raise ParameterError("psd and frequencies differ in length")
        if np.any(self.psd < 0):
            raise ParameterError("psd must be >= 0")

    @property
    def vbw(self) -> float:
        # averaging stands in for the analyser's video filter
        return self.rbw / self.averages

    @property
    def density(self) -> np.ndarray:
        """One-sided power spectral density (units^2 / Hz)."""
        return self.psd * 2.0 / self.sample_rate

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def total_power(self) -> float:
        # DC and, for even segments, Nyquist have no mirror image
        weights = np.ones_like(self.psd)
        weights[0] = 0.5
        if int(round(self.sample_rate / self.bin_width)) % 2 == 0:
            weights[-1] = 0.5
        return float(np.sum(self.density * weights) * self.bin_width)


@dataclass(frozen=True, eq=False)
class CrossSpectrum:
    """Averaged <X_out X_in*>; a delay tau of the output reads as phase +w tau."""

    frequencies: np.ndarray
    values: np.ndarray
    rbw: float
    averages: int
    sample_rate: float

    def __post_init__(self):
        object.__setattr__(self, "frequencies", np.asarray(self.frequencies, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))
        if self.values.shape != self.frequencies.shape:
            raise ParameterError("values and frequencies differ in length")


# -----------------------------------------------------------------------------
# Seeds and synthesis
# -----------------------------------------------------------------------------

def next_power_of_two(n: int) -> int:
    return 1 << (max(int(n), 1) - 1).bit_length()


def derive_seeds(seed: int, count: int) -> List[int]:
    """Independent child seeds, stable across platforms and worker counts."""
    state = np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)
    return [int(s) & 0x7FFF_FFFF_FFFF_FFFF for s in state]


def band_shape(frequencies: np.ndarray, bandwidth: float, rolloff: float = DEFAULT_ROLLOFF) -> np.ndarray:
    """Raised-cosine power mask, flat to bandwidth (1 - rolloff/2), zero past bandwidth (1 + rolloff/2)."""
    f = np.abs(np.asarray(frequencies, dtype=float))
    lo = bandwidth * (1.0 - rolloff / 2.0)
    hi = bandwidth * (1.0 + rolloff / 2.0)
    shape = np.zeros_like(f)
    shape[f <= lo] = 1.0
    edge = (f > lo) & (f < hi)
    if rolloff > 0:
        shape[edge] = 0.5 * (1.0 + np.cos(np.pi * (f[edge] - lo) / (hi - lo)))
    return shape


def _shaped_noise(rng: np.random.Generator, n: int, sample_rate: float, power_shape) -> np.ndarray:
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white) * np.sqrt(power_shape)
    return np.fft.irfft(spectrum, n)


def synth_white_noise(variance: float, sample_rate: float, n_samples: int, seed: int) -> TimeSeries:
    """Flat record; psd equals ``variance`` in every bin (variance 1 is vacuum)."""
    if variance < 0:
        raise ParameterError("variance must be >= 0")
    rng = np.random.default_rng(seed)
    return TimeSeries(rng.standard_normal(int(n_samples)) * np.sqrt(variance), sample_rate, seed)


def synth_bandlimited_noise(bandwidth: float, sample_rate: float, duration: float, seed: int,
                            level: float = 1.0, rolloff: float = DEFAULT_ROLLOFF) -> TimeSeries:
    """Zero-mean Gaussian record, psd ``level`` over [0, bandwidth], raised-cosine edge.

    The record length is ``duration * sample_rate`` rounded up to a power of
    two; its expected variance is ``level * 2 * bandwidth / sample_rate``.
    """
    if not 0 < bandwidth or bandwidth * (1.0 + rolloff / 2.0) >= sample_rate / 2.0:
        raise ParameterError(f"bandwidth {bandwidth} Hz must be positive and below Nyquist ({sample_rate / 2} Hz)")
    if duration <= 0:
        raise ParameterError("duration must be > 0")
    n = next_power_of_two(int(round(duration * sample_rate)))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    rng = np.random.default_rng(seed)
    samples = _shaped_noise(rng, n, sample_rate, level * band_shape(freqs, bandwidth, rolloff))
    logger.debug("band-limited noise: n=%d B=%.0f Hz var=%.4g", n, bandwidth, samples.var())
    return TimeSeries(samples, sample_rate, seed)


def synth_tones(frequencies: Sequence[float], amplitude: float, sample_rate: float, n_samples: int,
                phases: Optional[Sequence[float]] = None) -> np.ndarray:
    t = np.arange(int(n_samples)) / sample_rate
    phases = phases if phases is not None else [0.0] * len(frequencies)
    out = np.zeros(t.size)
    for f, p in zip(frequencies, phases):
        out += amplitude * np.cos(TWO_PI * f * t + p)
    return out


def add_tones(series: TimeSeries, frequencies: Sequence[float] = LOCKING_TONES_HZ,
              amplitude: float = 10.0) -> TimeSeries:
    """Superimpose sinusoids, e.g. the 87/174 kHz laser-locking peaks."""
    tones = synth_tones(frequencies, amplitude, series.sample_rate, len(series))
    return TimeSeries(series.samples + tones, series.sample_rate, series.seed)


# -----------------------------------------------------------------------------
# Channel filtering
# -----------------------------------------------------------------------------

def transfer_function(params: EitParameters, n_samples: int, sample_rate: float, onesided: bool = True):
    """Filter applied to the numpy spectrum of a record.

    numpy transforms with exp(-i 2 pi f t), so the physics-convention
    transfer t(w) enters as conj(t(2 pi f)) at f >= 0. DC and Nyquist bins
    are forced real; the two-sided form is Hermitian.
    """
    freqs = np.fft.rfftfreq(n_samples, 1.0 / sample_rate)
    response = channel_response(params, TWO_PI * freqs)
    eta = np.asarray(response.intensity_transmissivity)
    h = np.conj(np.asarray(response.amplitude_transfer, dtype=complex))
    h[0] = np.sqrt(eta[0])
    if n_samples % 2 == 0:
        h[-1] = np.sqrt(eta[-1])
    if onesided:
        return h, eta
    full = np.empty(n_samples, dtype=complex)
    full[:h.size] = h
    tail = h[1:n_samples - h.size + 1][::-1]
    full[h.size:] = np.conj(tail)
    return full, eta


def filter_through_channel(series: TimeSeries, params: EitParameters, inj: NoiseInjection, seed: int,
                           quadrature: Quadrature = Quadrature.AMPLITUDE) -> TimeSeries:
    """Propagate a record through the medium.

    The signal is multiplied by the transfer function; independent Gaussian
    realisations of the (1 - eta) vacuum term and the injected excess are
    added with their per-frequency variances.
    """
    n = len(series)
    h, eta = transfer_function(params, n, series.sample_rate)
    out = np.fft.irfft(np.fft.rfft(series.samples) * h, n)

    vacuum_seed, excess_seed = derive_seeds(seed, 2)
    loss = np.clip(1.0 - eta, 0.0, 1.0)
    if np.any(loss > 0):
        out += _shaped_noise(np.random.default_rng(vacuum_seed), n, series.sample_rate, loss)
    added = inj.added_variance(quadrature)
    if added > 0 and inj.through_loss:
        out += _shaped_noise(np.random.default_rng(excess_seed), n, series.sample_rate, added * eta)
    elif added > 0:
        out += np.random.default_rng(excess_seed).standard_normal(n) * np.sqrt(added)
    return TimeSeries(out, series.sample_rate, seed)


def simulate_channel(params: EitParameters, inj: NoiseInjection, sample_rate: float, n_samples: int, seed: int,
                     quadrature: Quadrature = Quadrature.AMPLITUDE,
                     signal_series: Optional[TimeSeries] = None) -> Tuple[TimeSeries, TimeSeries]:
    """One Monte-Carlo trial: (input, output) records for a coherent input.

    The input is vacuum noise plus ``signal_series`` if given (classical
    modulation riding on the coherent state).
    """
    input_seed, channel_seed = derive_seeds(seed, 2)
    vacuum = synth_white_noise(1.0, sample_rate, n_samples, input_seed)
    samples = vacuum.samples
    if signal_series is not None:
        if len(signal_series) != n_samples or signal_series.sample_rate != sample_rate:
            raise ParameterError("signal_series does not match the trial record")
        samples = samples + signal_series.samples
    record = TimeSeries(samples, sample_rate, seed)
    return record, filter_through_channel(record, params, inj, channel_seed, quadrature)


# -----------------------------------------------------------------------------
# Estimation
# -----------------------------------------------------------------------------

def _segment_plan(series: TimeSeries, rbw: float, averages: int) -> Tuple[int, int, int]:
    if rbw <= 0 or averages < 1:
        raise ParameterError("rbw must be > 0 and averages >= 1")
    nperseg = int(round(series.sample_rate / rbw))
    if nperseg < 4:
        raise ParameterError(f"rbw {rbw} Hz too coarse for sample rate {series.sample_rate} Hz")
    hop = nperseg // 2
    needed = nperseg + (averages - 1) * hop
    if len(series) < needed:
        raise ParameterError(
            f"record of {len(series)} samples too short for {averages} averages at rbw {rbw} Hz "
            f"(needs {needed})")
    return nperseg, hop, needed


def _fold_edges(values: np.ndarray, nperseg: int) -> np.ndarray:
    # scipy's one-sided density doubles every bin except DC and (even nperseg) Nyquist
    values = values.copy()
    values[0] *= 2.0
    if nperseg % 2 == 0:
        values[-1] *= 2.0
    return values


def estimate_psd(series: TimeSeries, rbw: float, averages: int) -> SpectrumEstimate:
    """Hann-windowed Welch average, 50 % overlap, segment length sample_rate / rbw."""
    nperseg, hop, needed = _segment_plan(series, rbw, averages)
    freqs, density = signal.welch(series.samples[:needed], fs=series.sample_rate, window="hann",
                                  nperseg=nperseg, noverlap=nperseg - hop, detrend=False,
                                  scaling="density", return_onesided=True)
    return SpectrumEstimate(freqs, _fold_edges(density, nperseg) * series.sample_rate / 2.0, float(rbw),
                            int(averages), float(series.sample_rate))


def estimate_cross_spectrum(a: TimeSeries, b: TimeSeries, rbw: float, averages: int) -> CrossSpectrum:
    """Cross-spectrum of input ``a`` and output ``b`` on the estimate_psd grid."""
    if a.sample_rate != b.sample_rate:
        raise ParameterError("sample rates differ")
    nperseg, hop, needed = _segment_plan(a, rbw, averages)
    _segment_plan(b, rbw, averages)
    # scipy returns conj(X_first) * X_second
    freqs, values = signal.csd(b.samples[:needed], a.samples[:needed], fs=a.sample_rate, window="hann",
                               nperseg=nperseg, noverlap=nperseg - hop, detrend=False,
                               scaling="density", return_onesided=True)
    return CrossSpectrum(freqs, _fold_edges(values, nperseg) * a.sample_rate / 2.0, float(rbw), int(averages),
                         float(a.sample_rate))


def cross_correlate(a: TimeSeries, b: TimeSeries, max_lag: Optional[float] = None):
    """Normalised cross-correlation; positive lag means ``b`` lags ``a``."""
    if a.sample_rate != b.sample_rate:
        raise ParameterError(f"sample rates differ: {a.sample_rate} vs {b.sample_rate}")
    x = a.samples - a.samples.mean()
    y = b.samples - b.samples.mean()
    norm = np.sqrt(np.dot(x, x) * np.dot(y, y))
    if norm == 0:
        raise ParameterError("cannot correlate a constant record")
    corr = signal.correlate(y, x, mode="full", method="fft") / norm
    lags = signal.correlation_lags(y.size, x.size, mode="full") / a.sample_rate
    if max_lag is not None:
        keep = np.abs(lags) <= max_lag
        lags, corr = lags[keep], corr[keep]
    return lags, corr


def correlation_width(lags: np.ndarray, corr: np.ndarray) -> float:
    """Full width at half maximum of the main lobe, linearly interpolated."""
    peak = int(np.argmax(corr))
    half = corr[peak] / 2.0

    def crossing(step: int) -> float:
        i = peak
        while 0 <= i + step < corr.size and corr[i + step] > half:
            i += step
        j = i + step
        if not 0 <= j < corr.size:
            return float(lags[i])
        frac = (corr[i] - half) / (corr[i] - corr[j])
        return float(lags[i] + frac * (lags[j] - lags[i]))

    return crossing(+1) - crossing(-1)


def estimate_delay(a: TimeSeries, b: TimeSeries, min_peak: float = 0.1) -> float:
    """Lag of the correlation maximum with three-point parabolic refinement."""
    lags, corr = cross_correlate(a, b)
    i = int(np.argmax(corr))
    if corr[i] < min_peak:
        raise NoDelayFoundError(float(corr[i]), min_peak)
    offset = 0.0
    if 0 < i < corr.size - 1:
        y0, y1, y2 = corr[i - 1], corr[i], corr[i + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom != 0:
            offset = 0.5 * (y0 - y2) / denom
    return float(lags[i] + offset / a.sample_rate)
