"""
Scenario files: JSON documents describing one analysis run.

Validation runs in two passes, a structural pass against ``SCHEMA`` and a
semantic pass over the parsed values; every problem found is reported
together in one ConfigError.
"""

import dataclasses
import json
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from .errors import ConfigError, EitChannelError
from .medium import EitParameters
from .metrics import CurveKind
from .quadrature import NoiseInjection, Quadrature
from .synth import DEFAULT_ROLLOFF, DEFAULT_SAMPLE_RATE, LOCKING_TONES_HZ, next_power_of_two
from .units import TWO_PI, from_db, hz_to_rad

BUNDLED_PACKAGE = "eit_channel"
BUNDLED_DIR = "scenarios"

# Exclusion and noise bins used by the empirical SNR, on each side of a tone
_SNR_BINS = 3 + 20 + 1


class AnalysisKind(str, Enum):
    SWEEP_CV = "sweep_cv"
    SWEEP_TS = "sweep_ts"
    DELAY_EXPERIMENT = "delay_experiment"
    CORRELATION = "correlation"
    FIT = "fit"
    NOISE_BUDGET = "noise_budget"


# Config names of fittable parameters and their internal counterparts
FIT_PARAMETER_NAMES = {
    "dephasing_rate_hz": "dephasing_rate",
    "spontaneous_rate_hz": "spontaneous_rate",
    "pump_rabi_hz": "pump_rabi",
    "optical_depth_rate": "optical_depth_rate",
}

# --- JSON Schema Definition ---
_NUMBER = {"type": "number"}
_NUMBER_LIST = {"type": "array", "items": {"type": "number"}}

SCHEMA = {
    "type": "object",
    "required": ["name", "analysis", "media"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "analysis": {"type": "string", "enum": [k.value for k in AnalysisKind]},
        "seed": {"type": "integer"},
        "quadratures": {"type": "array", "items": {"type": "string", "enum": [q.value for q in Quadrature]}},
        "media": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "spontaneous_rate_hz", "dephasing_rate_hz", "pump_rabi_hz"],
                "properties": {
                    "name": {"type": "string"},
                    "label": {"type": "string"},
                    "spontaneous_rate_hz": _NUMBER,
                    "dephasing_rate_hz": _NUMBER,
                    "pump_rabi_hz": _NUMBER,
                    "medium_length_m": _NUMBER,
                    "wavelength_m": _NUMBER,
                    "wavenumber": _NUMBER,
                    "light_speed": _NUMBER,
                    "optical_depth_rate": _NUMBER,
                    "atomic_density": _NUMBER,
                    "coupling_constant": _NUMBER,
                    "group_delay_s": _NUMBER,
                },
            },
        },
        "injection": {
            "type": "object",
            "properties": {
                "coupling_amp": _NUMBER,
                "coupling_phase": _NUMBER,
                "pump_excess_db": _NUMBER,
                "extra_var_amp": _NUMBER,
                "extra_var_phase": _NUMBER,
                "through_loss": {"type": "boolean"},
            },
        },
        "grid": {
            "type": "object",
            "required": ["start_hz", "stop_hz", "points"],
            "properties": {"start_hz": _NUMBER, "stop_hz": _NUMBER, "points": {"type": "integer"}},
        },
        "monte_carlo": {
            "type": "object",
            "properties": {
                "trials": {"type": "integer"},
                "sample_rate_hz": _NUMBER,
                "duration_s": _NUMBER,
                "workers": {"type": "integer"},
                "input_variance": _NUMBER,
            },
        },
        "spectrum": {
            "type": "object",
            "required": ["rbw_hz", "averages"],
            "properties": {"rbw_hz": _NUMBER, "averages": {"type": "integer"}},
        },
        "output": {
            "type": "object",
            "properties": {
                "directory": {"type": "string"},
                "timeseries": {"type": "string", "enum": ["none", "binary", "csv"]},
            },
        },
        "delay": {
            "type": "object",
            "properties": {
                "noise_bandwidth_hz": _NUMBER,
                "noise_level": _NUMBER,
                "rolloff": _NUMBER,
                "max_lag_s": _NUMBER,
                "min_peak": _NUMBER,
            },
        },
        "fit": {
            "type": "object",
            "required": ["medium"],
            "properties": {
                "kind": {"type": "string", "enum": [CurveKind.BENCHMARK_CV.value, CurveKind.BENCHMARK_TS.value]},
                "medium": {"type": "string"},
                "free": {"type": "array", "items": {"type": "string", "enum": list(FIT_PARAMETER_NAMES)}},
                "initial": {"type": "object", "patternProperties": {"^.*$": _NUMBER}},
                "bounds": {
                    "type": "object",
                    "patternProperties": {"^.*$": {"type": "array", "items": {"type": ["number", "null"]}}},
                },
                "data": {"type": "string"},
                "truth": {"type": "string"},
                "noise_fraction": _NUMBER,
            },
        },
        "tones": {
            "type": "object",
            "properties": {"frequencies_hz": _NUMBER_LIST, "amplitude": _NUMBER},
        },
        "fixed_gain": {
            "type": "object",
            "required": ["optimise_at_hz"],
            "properties": {"optimise_at_hz": _NUMBER, "input_variance": _NUMBER},
        },
    },
}

_TYPES = {
    "object": dict,
    "array": list,
    "string": str,
    "integer": int,
    "number": (int, float),
    "boolean": bool,
    "null": type(None),
}


def _type_ok(data: Any, expected: str) -> bool:
    if expected in ("integer", "number") and isinstance(data, bool):
        return False
    return isinstance(data, _TYPES[expected])


def validate_json_structure(data: Any, schema: Dict[str, Any], path: str = "") -> List[Tuple[str, str]]:
    """
    Recursively validates data against a simple JSON schema.
    Returns (field path, message) pairs; unknown keys are errors.
    """
    where = path or "<root>"
    expected = schema.get("type")
    if expected:
        options = expected if isinstance(expected, list) else [expected]
        if not any(_type_ok(data, t) for t in options):
            return [(where, f"Expected {' or '.join(options)}, got {type(data).__name__}")]

    if "enum" in schema and data not in schema["enum"]:
        return [(where, f"Value '{data}' is not in enum {schema['enum']}")]

    errors = []
    if isinstance(data, dict):
        for req in schema.get("required", []):
            if req not in data:
                errors.append((where, f"Missing required field '{req}'"))
        if errors:
            return errors

        properties = schema.get("properties", {})
        patterns = {re.compile(p): s for p, s in schema.get("patternProperties", {}).items()}
        for key, value in data.items():
            sub_path = f"{path}.{key}" if path else key
            if key in properties:
                errors.extend(validate_json_structure(value, properties[key], sub_path))
                continue
            matched = [s for rx, s in patterns.items() if rx.match(key)]
            if not matched:
                errors.append((where, f"Unexpected field '{key}'"))
            for sub_schema in matched:
                errors.extend(validate_json_structure(value, sub_schema, sub_path))

    if isinstance(data, list) and "items" in schema:
        for i, item in enumerate(data):
            errors.extend(validate_json_structure(item, schema["items"], f"{path}[{i}]"))
    return errors


# -----------------------------------------------------------------------------
# Config model
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class MediumConfig:
    """One EitParameters set in Hz-friendly units; ``label`` is documentation only."""

    name: str
    spontaneous_rate_hz: float
    dephasing_rate_hz: float
    pump_rabi_hz: float
    medium_length_m: float = 0.075
    label: str = ""
    wavelength_m: Optional[float] = None
    wavenumber: Optional[float] = None
    light_speed: Optional[float] = None
    optical_depth_rate: Optional[float] = None
    atomic_density: Optional[float] = None
    coupling_constant: Optional[float] = None
    group_delay_s: Optional[float] = None

    def to_parameters(self) -> EitParameters:
        kwargs = {
            "spontaneous_rate": hz_to_rad(self.spontaneous_rate_hz),
            "dephasing_rate": hz_to_rad(self.dephasing_rate_hz),
            "pump_rabi": hz_to_rad(self.pump_rabi_hz),
            "medium_length": float(self.medium_length_m),
        }
        if self.wavenumber is not None:
            kwargs["wavenumber"] = float(self.wavenumber)
        elif self.wavelength_m is not None:
            kwargs["wavenumber"] = TWO_PI / self.wavelength_m
        if self.light_speed is not None:
            kwargs["light_speed"] = float(self.light_speed)
        if self.group_delay_s is not None:
            return EitParameters.from_group_delay(self.group_delay_s, **kwargs)
        if self.atomic_density is not None:
            return EitParameters.from_density(self.atomic_density, self.coupling_constant, **kwargs)
        return EitParameters(optical_depth_rate=self.optical_depth_rate, **kwargs)


@dataclass(frozen=True)
class InjectionConfig:
    coupling_amp: float = 0.0
    coupling_phase: float = 0.0
    pump_excess_db: float = 7.0
    extra_var_amp: float = 0.0
    extra_var_phase: float = 0.0
    through_loss: bool = False

    def to_injection(self) -> NoiseInjection:
        level = from_db(self.pump_excess_db)
        return NoiseInjection(coupling_amp=self.coupling_amp, coupling_phase=self.coupling_phase,
                              pump_var_amp=level, pump_var_phase=level,
                              extra_var_amp=self.extra_var_amp, extra_var_phase=self.extra_var_phase,
                              through_loss=self.through_loss)


@dataclass(frozen=True)
class GridConfig:
    start_hz: float
    stop_hz: float
    points: int

    def frequencies(self) -> np.ndarray:
        return np.linspace(self.start_hz, self.stop_hz, self.points)


@dataclass(frozen=True)
class MonteCarloConfig:
    trials: int = 1
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE
    duration_s: float = 1.0
    workers: int = 1
    input_variance: float = 1.0

    @property
    def n_samples(self) -> int:
        return next_power_of_two(int(round(self.duration_s * self.sample_rate_hz)))


@dataclass(frozen=True)
class SpectrumConfig:
    rbw_hz: float
    averages: int

    def samples_needed(self, sample_rate: float) -> int:
        nperseg = int(round(sample_rate / self.rbw_hz))
        return nperseg + (self.averages - 1) * (nperseg // 2)


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    timeseries: str = "none"


@dataclass(frozen=True)
class DelayConfig:
    noise_bandwidth_hz: float = 60.0e3
    noise_level: float = 1.0e4
    rolloff: float = DEFAULT_ROLLOFF
    max_lag_s: float = 50.0e-6
    min_peak: float = 0.1


@dataclass(frozen=True)
class FitConfig:
    medium: str
    kind: str = CurveKind.BENCHMARK_CV.value
    free: Tuple[str, ...] = ("dephasing_rate_hz",)
    initial: Mapping[str, float] = field(default_factory=dict)
    bounds: Mapping[str, Tuple[Optional[float], Optional[float]]] = field(default_factory=dict)
    data: Optional[str] = None
    truth: Optional[str] = None
    noise_fraction: float = 0.0

    def internal_free(self) -> Tuple[str, ...]:
        return tuple(FIT_PARAMETER_NAMES[n] for n in self.free)

    def internal_initial(self) -> Dict[str, float]:
        return {FIT_PARAMETER_NAMES[n]: _to_internal(n, v) for n, v in self.initial.items()}

    def internal_bounds(self) -> Dict[str, Tuple[float, float]]:
        out = {}
        for n, (lo, hi) in self.bounds.items():
            out[FIT_PARAMETER_NAMES[n]] = (0.0 if lo is None else _to_internal(n, lo),
                                           np.inf if hi is None else _to_internal(n, hi))
        return out


def _to_internal(name: str, value: float) -> float:
    return hz_to_rad(value) if name.endswith("_hz") else float(value)


@dataclass(frozen=True)
class TonesConfig:
    frequencies_hz: Tuple[float, ...] = LOCKING_TONES_HZ
    amplitude: float = 10.0


@dataclass(frozen=True)
class FixedGainConfig:
    optimise_at_hz: float
    input_variance: float = 100.0


@dataclass(frozen=True)
class Scenario:
    name: str
    analysis: AnalysisKind
    media: Tuple[MediumConfig, ...]
    description: str = ""
    seed: int = 0
    quadratures: Tuple[Quadrature, ...] = (Quadrature.AMPLITUDE,)
    injection: InjectionConfig = field(default_factory=InjectionConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    grid: Optional[GridConfig] = None
    monte_carlo: Optional[MonteCarloConfig] = None
    spectrum: Optional[SpectrumConfig] = None
    delay: Optional[DelayConfig] = None
    fit: Optional[FitConfig] = None
    tones: Optional[TonesConfig] = None
    fixed_gain: Optional[FixedGainConfig] = None
    # Directory that relative paths in the file resolve against
    base_dir: str = field(default=".", compare=False)

    def medium(self, name: str) -> MediumConfig:
        for m in self.media:
            if m.name == name:
                return m
        raise KeyError(name)

    def resolve_path(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    def with_overrides(self, seed: Optional[int] = None, trials: Optional[int] = None) -> "Scenario":
        """Apply CLI overrides; the result is what the manifest records."""
        changes = {}
        if seed is not None:
            if seed < 0:
                raise ConfigError("seed must be >= 0", field="seed")
            changes["seed"] = int(seed)
        if trials is not None:
            if self.monte_carlo is None:
                raise ConfigError("--trials given but the scenario has no monte_carlo block", field="monte_carlo")
            if trials < 1:
                raise ConfigError("trials must be >= 1", field="monte_carlo.trials")
            changes["monte_carlo"] = dataclasses.replace(self.monte_carlo, trials=int(trials))
        return dataclasses.replace(self, **changes)


_BLOCKS = {
    "injection": InjectionConfig,
    "grid": GridConfig,
    "monte_carlo": MonteCarloConfig,
    "spectrum": SpectrumConfig,
    "output": OutputConfig,
    "delay": DelayConfig,
    "tones": TonesConfig,
    "fixed_gain": FixedGainConfig,
}


def _build(data: Dict[str, Any], base_dir: str) -> Scenario:
    kwargs = {
        "name": data["name"],
        "analysis": AnalysisKind(data["analysis"]),
        "media": tuple(MediumConfig(**m) for m in data["media"]),
        "description": data.get("description", ""),
        "seed": data.get("seed", 0),
        "base_dir": base_dir,
    }
    if "quadratures" in data:
        kwargs["quadratures"] = tuple(Quadrature(q) for q in data["quadratures"])
    for key, cls in _BLOCKS.items():
        if key in data:
            block = dict(data[key])
            if key == "tones" and "frequencies_hz" in block:
                block["frequencies_hz"] = tuple(float(f) for f in block["frequencies_hz"])
            kwargs[key] = cls(**block)
    if "fit" in data:
        block = dict(data["fit"])
        if "free" in block:
            block["free"] = tuple(block["free"])
        if "bounds" in block:
            block["bounds"] = {k: tuple(v) for k, v in block["bounds"].items()}
        kwargs["fit"] = FitConfig(**block)
    return Scenario(**kwargs)


def _semantic_errors(s: Scenario) -> List[Tuple[str, str]]:
    errors = []
    names = [m.name for m in s.media]
    if not s.media:
        errors.append(("media", "At least one medium is required"))
    for dup in sorted({n for n in names if names.count(n) > 1}):
        errors.append(("media", f"Duplicate medium name '{dup}'"))

    for i, m in enumerate(s.media):
        where = f"media[{i}]"
        sources = [m.optical_depth_rate is not None, m.atomic_density is not None or m.coupling_constant is not None,
                   m.group_delay_s is not None]
        if sum(sources) != 1:
            errors.append((where, "Give exactly one of optical_depth_rate, atomic_density + coupling_constant, "
                                  "or group_delay_s"))
            continue
        if (m.atomic_density is None) != (m.coupling_constant is None):
            errors.append((where, "atomic_density and coupling_constant go together"))
            continue
        if m.wavelength_m is not None and m.wavenumber is not None:
            errors.append((where, "Give wavelength_m or wavenumber, not both"))
            continue
        if m.wavelength_m is not None and not m.wavelength_m > 0:
            errors.append((f"{where}.wavelength_m", "Must be > 0"))
            continue
        try:
            m.to_parameters()
        except EitChannelError as e:
            errors.append((where, str(e)))

    injection = None
    try:
        injection = s.injection.to_injection()
    except EitChannelError as e:
        errors.append(("injection", str(e)))

    if s.grid is not None:
        g = s.grid
        if g.points < 1:
            errors.append(("grid.points", "Frequency grid is empty"))
        elif g.start_hz < 0:
            errors.append(("grid.start_hz", "Must be >= 0"))
        elif g.points > 1 and not g.stop_hz > g.start_hz:
            errors.append(("grid", "Grid must be increasing (stop_hz > start_hz)"))
        elif g.points == 1 and g.stop_hz != g.start_hz:
            errors.append(("grid", "A one-point grid needs start_hz == stop_hz"))

    if s.seed < 0:
        errors.append(("seed", "Must be >= 0"))
    if len(set(s.quadratures)) != len(s.quadratures) or not s.quadratures:
        errors.append(("quadratures", "List each quadrature at most once, at least one"))

    mc = s.monte_carlo
    if mc is not None:
        if mc.trials < 1:
            errors.append(("monte_carlo.trials", "Must be >= 1"))
        if mc.workers < 1:
            errors.append(("monte_carlo.workers", "Must be >= 1"))
        if not mc.sample_rate_hz > 0 or not mc.duration_s > 0:
            errors.append(("monte_carlo", "sample_rate_hz and duration_s must be > 0"))
        if mc.input_variance < 1:
            errors.append(("monte_carlo.input_variance", "Must be >= 1 (QNL units)"))
        if s.grid is not None and s.grid.points >= 1 and s.grid.stop_hz >= mc.sample_rate_hz / 2:
            errors.append(("grid.stop_hz", "Must lie below the Nyquist frequency"))

    sp = s.spectrum
    if sp is not None:
        if not sp.rbw_hz > 0 or sp.averages < 1:
            errors.append(("spectrum", "rbw_hz must be > 0 and averages >= 1"))
        elif mc is not None and mc.sample_rate_hz > 0 and mc.duration_s > 0:
            needed = sp.samples_needed(mc.sample_rate_hz)
            if needed > mc.n_samples:
                errors.append(("spectrum", f"{sp.averages} averages at rbw {sp.rbw_hz} Hz need {needed} samples; "
                                           f"the record has {mc.n_samples}"))

    a = s.analysis
    if a in (AnalysisKind.SWEEP_CV, AnalysisKind.SWEEP_TS) and s.grid is None:
        errors.append(("grid", f"Analysis '{a.value}' needs a frequency grid"))
    if a in (AnalysisKind.SWEEP_CV, AnalysisKind.SWEEP_TS, AnalysisKind.NOISE_BUDGET) \
            and mc is not None and sp is None:
        errors.append(("spectrum", "Monte-Carlo runs need a spectrum block"))
    if a in (AnalysisKind.DELAY_EXPERIMENT, AnalysisKind.CORRELATION):
        if mc is None:
            errors.append(("monte_carlo", f"Analysis '{a.value}' needs a monte_carlo block"))
        d = s.delay or DelayConfig()
        if not d.noise_bandwidth_hz > 0 or not d.noise_level > 0 or not d.max_lag_s > 0:
            errors.append(("delay", "noise_bandwidth_hz, noise_level and max_lag_s must be > 0"))
        elif mc is not None and d.noise_bandwidth_hz * (1 + d.rolloff / 2) >= mc.sample_rate_hz / 2:
            errors.append(("delay.noise_bandwidth_hz", "Must lie below the Nyquist frequency"))
    if a is AnalysisKind.NOISE_BUDGET and injection is not None and injection.is_zero:
        errors.append(("injection", "Analysis 'noise_budget' needs a nonzero injection"))
    if a is AnalysisKind.SWEEP_TS and mc is not None and sp is not None and s.grid is not None and sp.rbw_hz > 0:
        tones = s.grid.frequencies()
        tones = tones[tones > 0]
        if tones.size > 1 and np.min(np.diff(tones)) < 2 * _SNR_BINS * sp.rbw_hz:
            errors.append(("grid", f"Modulation tones must be at least {2 * _SNR_BINS} rbw apart"))
        if tones.size and tones[0] < _SNR_BINS * sp.rbw_hz:
            errors.append(("grid.start_hz", f"Lowest modulation tone must be at least {_SNR_BINS} rbw above DC"))
    if s.fixed_gain is not None:
        if a is not AnalysisKind.SWEEP_CV:
            errors.append(("fixed_gain", "Only valid with analysis 'sweep_cv'"))
        if s.fixed_gain.input_variance < 1:
            errors.append(("fixed_gain.input_variance", "Must be >= 1 (QNL units)"))

    if a is AnalysisKind.FIT:
        f = s.fit
        if f is None:
            errors.append(("fit", "Analysis 'fit' needs a fit block"))
        else:
            errors.extend(_fit_errors(s, f, names))
    elif s.fit is not None:
        errors.append(("fit", "Only valid with analysis 'fit'"))
    return errors


def _fit_errors(s: Scenario, f: FitConfig, names: List[str]) -> List[Tuple[str, str]]:
    errors = []
    if f.medium not in names:
        errors.append(("fit.medium", f"Unknown medium '{f.medium}'"))
    if (f.data is None) == (f.truth is None):
        errors.append(("fit", "Give exactly one of data or truth"))
    if f.truth is not None:
        if f.truth not in names:
            errors.append(("fit.truth", f"Unknown medium '{f.truth}'"))
        if s.grid is None:
            errors.append(("grid", "Synthetic fit data needs a frequency grid"))
    if f.data is not None and not os.path.isfile(s.resolve_path(f.data)):
        errors.append(("fit.data", f"Data file not found: {f.data}"))
    if not f.free or len(set(f.free)) != len(f.free):
        errors.append(("fit.free", "List each free parameter once, at least one"))
    for key in list(f.initial) + list(f.bounds):
        if key not in FIT_PARAMETER_NAMES:
            errors.append((f"fit.{key}", f"Unknown parameter '{key}'"))
    for key, b in f.bounds.items():
        if len(b) != 2:
            errors.append((f"fit.bounds.{key}", "Expected [lower, upper]"))
        elif b[0] is not None and b[1] is not None and not b[0] < b[1]:
            errors.append((f"fit.bounds.{key}", "Lower bound must be below upper bound"))
        elif b[0] is not None and b[0] < 0:
            errors.append((f"fit.bounds.{key}", "Lower bound must be >= 0"))
    if f.noise_fraction < 0:
        errors.append(("fit.noise_fraction", "Must be >= 0"))
    return errors


def validate_scenario(data: Any, base_dir: str = ".") -> List[str]:
    """
    Validates a scenario dictionary.
    Returns a list of error messages. Empty list implies valid config.
    """
    return [f"{path}: {msg}" for path, msg in _collect(data, base_dir)[1]]


def _collect(data: Any, base_dir: str) -> Tuple[Optional[Scenario], List[Tuple[str, str]]]:
    # Level 1: Schema Validation
    schema_errors = validate_json_structure(data, SCHEMA)
    if schema_errors:
        return None, schema_errors
    # Level 2: Semantic Validation
    try:
        scenario = _build(data, base_dir)
    except (TypeError, ValueError) as e:
        return None, [("<root>", str(e))]
    return scenario, _semantic_errors(scenario)


def parse_scenario(data: Any, base_dir: str = ".") -> Scenario:
    scenario, errors = _collect(data, base_dir)
    if errors:
        lines = [f"{path}: {msg}" for path, msg in errors]
        raise ConfigError(f"{len(errors)} configuration error(s): " + "; ".join(lines),
                          field=errors[0][0], errors=lines)
    return scenario


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"Cannot read scenario file {path}: {e.strerror}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {path}: {e.msg}", line=e.lineno)
    return parse_scenario(data, base_dir=os.path.dirname(os.path.abspath(path)))


def _drop_none(value):
    if isinstance(value, dict):
        return {k: _drop_none(v) for k, v in value.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [_drop_none(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    return value


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    """Fully resolved config; ``parse_scenario`` of the result equals ``scenario``."""
    data = dataclasses.asdict(scenario)
    data.pop("base_dir")
    # Unbounded sides of fit bounds stay as null inside their lists
    return _drop_none(data)


# -----------------------------------------------------------------------------
# Bundled scenarios
# -----------------------------------------------------------------------------

def _bundled_root():
    return resources.files(BUNDLED_PACKAGE).joinpath(BUNDLED_DIR)


def list_scenarios() -> List[str]:
    return sorted(p.name[:-len(".json")] for p in _bundled_root().iterdir() if p.name.endswith(".json"))


def find_scenario(name_or_path: str) -> str:
    """A file path as given, else the path of the bundled scenario of that name."""
    if os.path.isfile(name_or_path):
        return name_or_path
    name = name_or_path[:-len(".json")] if name_or_path.endswith(".json") else name_or_path
    if name in list_scenarios():
        return str(_bundled_root().joinpath(name + ".json"))
    raise ConfigError(f"No scenario file or bundled scenario named '{name_or_path}'")
