"""
Least-squares recovery of medium parameters from benchmark curves.

The model is the passive-loss benchmark of a medium, 1 - eta(w) for
conditional-variance data or eta(w) for signal-transfer data. The optimiser
is a damped Gauss-Newton (Levenberg-Marquardt) loop in coordinates
normalised by a per-parameter scale, projected onto box bounds.
"""

import csv
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import (DegenerateFitError, DegenerateParametersError, FitConvergenceError,
                     InvalidParametersError, ParameterError)
from .medium import EitParameters, channel_response
from .metrics import CurveKind, MetricCurve
from .quadrature import Quadrature
from .units import TWO_PI, hz_to_rad

logger = logging.getLogger("eit_channel.fit")

FREE_PARAMETERS = ("dephasing_rate", "optical_depth_rate", "pump_rabi", "spontaneous_rate")
FIT_KINDS = (CurveKind.BENCHMARK_CV, CurveKind.BENCHMARK_TS)

MAX_ITERATIONS = 200
TOLERANCE = 1e-10
JACOBIAN_STEP = 1e-6
# Singular values below this fraction of the largest mark a null direction
RANK_TOLERANCE = 1e-10

# Scales used when the starting value is 0
_FALLBACK_SCALE = {
    "dephasing_rate": TWO_PI * 1e3,
    "optical_depth_rate": 1.0,
    "pump_rabi": TWO_PI * 1e6,
    "spontaneous_rate": TWO_PI * 1e6,
}
# Strictly positive parameters keep this fraction of their start as lower bound
_POSITIVE_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class FitProblem:
    """Data points plus the parameter set to adjust.

    ``base`` carries the fixed parameters and the starting values of the
    free ones; ``initial`` overrides starting values by name. ``sigma`` of
    None means unit weights with the covariance rescaled by the reduced
    chi-square.
    """

    frequencies_hz: np.ndarray
    values: np.ndarray
    base: EitParameters
    free: Tuple[str, ...] = ("dephasing_rate",)
    sigma: Optional[np.ndarray] = None
    kind: CurveKind = CurveKind.BENCHMARK_CV
    initial: Mapping[str, float] = field(default_factory=dict)
    bounds: Mapping[str, Tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "frequencies_hz", np.atleast_1d(np.asarray(self.frequencies_hz, dtype=float)))
        object.__setattr__(self, "values", np.atleast_1d(np.asarray(self.values, dtype=float)))
        object.__setattr__(self, "free", tuple(self.free))
        object.__setattr__(self, "kind", CurveKind(self.kind))
        if self.sigma is not None:
            object.__setattr__(self, "sigma", np.atleast_1d(np.asarray(self.sigma, dtype=float)))

        if self.kind not in FIT_KINDS:
            raise ParameterError(f"cannot fit curves of kind {self.kind.value}")
        if not self.free:
            raise ParameterError("no free parameters")
        for name in list(self.free) + list(self.initial) + list(self.bounds):
            if name not in FREE_PARAMETERS:
                raise ParameterError(f"'{name}' is not a fittable parameter; choose from {', '.join(FREE_PARAMETERS)}")
        if len(set(self.free)) != len(self.free):
            raise ParameterError("free parameters repeat")
        if self.values.shape != self.frequencies_hz.shape:
            raise ParameterError("values and frequencies differ in length")
        if self.values.size < 2 * len(self.free):
            raise ParameterError(
                f"{self.values.size} data points for {len(self.free)} free parameters; need at least twice as many")
        if not np.all(np.isfinite(self.values)) or not np.all(np.isfinite(self.frequencies_hz)):
            raise ParameterError("data must be finite")
        if self.sigma is not None:
            if self.sigma.shape != self.values.shape:
                raise ParameterError("sigma and values differ in length")
            if np.any(~(self.sigma > 0)):
                raise ParameterError("sigma must be > 0")
        for name, (lo, hi) in self.bounds.items():
            if not lo < hi:
                raise ParameterError(f"bounds for {name} must satisfy lower < upper")
            if lo < 0 or (name != "dephasing_rate" and name != "optical_depth_rate" and lo <= 0):
                raise ParameterError(f"lower bound for {name} violates its physical range")
        for name in self.free:
            lo, hi = self.bound(name)
            if not lo <= self.start(name) <= hi:
                raise ParameterError(f"initial {name} = {self.start(name)!r} outside bounds [{lo!r}, {hi!r}]")

    def start(self, name: str) -> float:
        return float(self.initial.get(name, getattr(self.base, name)))

    def bound(self, name: str) -> Tuple[float, float]:
        if name in self.bounds:
            return tuple(float(b) for b in self.bounds[name])
        if name in ("dephasing_rate", "optical_depth_rate"):
            return 0.0, np.inf
        return _POSITIVE_FLOOR * max(self.start(name), _FALLBACK_SCALE[name]), np.inf

    @property
    def weights(self) -> np.ndarray:
        return np.ones_like(self.values) if self.sigma is None else self.sigma

    @property
    def absolute_sigma(self) -> bool:
        return self.sigma is not None


@dataclass(frozen=True, eq=False)
class FitResult:
    params: EitParameters
    values: Dict[str, float]
    uncertainties: Dict[str, float]
    residual_norm: float
    initial_residual_norm: float
    iterations: int
    covariance: np.ndarray
    kind: CurveKind
    trace: List[dict] = field(default_factory=list)

    def curve(self, frequencies_hz, quadrature: Quadrature = Quadrature.AMPLITUDE, label: str = "") -> MetricCurve:
        freqs = np.atleast_1d(np.asarray(frequencies_hz, dtype=float))
        return MetricCurve(freqs, model_values(self.params, freqs, self.kind), self.kind, quadrature, label=label)

    def summary(self) -> dict:
        return {
            "kind": self.kind.value,
            "values": {k: float(v) for k, v in self.values.items()},
            "uncertainties": {k: float(v) for k, v in self.uncertainties.items()},
            "residual_norm": float(self.residual_norm),
            "initial_residual_norm": float(self.initial_residual_norm),
            "iterations": int(self.iterations),
        }


def model_values(params: EitParameters, frequencies_hz, kind: CurveKind) -> np.ndarray:
    eta = np.asarray(channel_response(params, hz_to_rad(np.asarray(frequencies_hz, dtype=float)))
                     .intensity_transmissivity, dtype=float)
    return 1.0 - eta if CurveKind(kind) is CurveKind.BENCHMARK_CV else eta


class _Objective:
    """Weighted residuals as a function of the normalised free coordinates."""

    def __init__(self, problem: FitProblem):
        self.problem = problem
        starts = np.array([problem.start(n) for n in problem.free])
        self.scale = np.array([abs(s) if s != 0 else _FALLBACK_SCALE[n] for n, s in zip(problem.free, starts)])
        self.x0 = starts / self.scale
        bounds = [problem.bound(n) for n in problem.free]
        self.lower = np.array([b[0] for b in bounds]) / self.scale
        self.upper = np.array([b[1] for b in bounds]) / self.scale

    def params(self, x: np.ndarray) -> EitParameters:
        p = x * self.scale
        return self.problem.base.replace(**{n: float(v) for n, v in zip(self.problem.free, p)})

    def residuals(self, x: np.ndarray) -> np.ndarray:
        prob = self.problem
        try:
            model = model_values(self.params(x), prob.frequencies_hz, prob.kind)
        except (InvalidParametersError, DegenerateParametersError):
            return np.full(prob.values.shape, np.inf)
        return (model - prob.values) / prob.weights

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        cols = []
        for j in range(x.size):
            h = JACOBIAN_STEP * max(abs(x[j]), 1.0)
            up, down = x.copy(), x.copy()
            up[j] += h
            down[j] -= h
            if up[j] > self.upper[j]:
                up[j] = x[j]
            if down[j] < self.lower[j]:
                down[j] = x[j]
            cols.append((self.residuals(up) - self.residuals(down)) / (up[j] - down[j]))
        return np.column_stack(cols)


def _check_rank(jac: np.ndarray, names: Sequence[str]):
    _, s, vt = np.linalg.svd(jac, full_matrices=True)
    s_full = np.zeros(vt.shape[0])
    s_full[:s.size] = s
    top = s_full.max()
    null = vt[s_full <= RANK_TOLERANCE * top] if top > 0 else vt
    if null.size == 0:
        return
    involved = np.any(np.abs(null) > 0.1, axis=0)
    raise DegenerateFitError([n for n, hit in zip(names, involved) if hit])


def fit(problem: FitProblem, max_iterations: int = MAX_ITERATIONS) -> FitResult:
    """Weighted least squares sum(((model - value) / sigma)^2) over the free parameters.

    Converges when the relative step and the relative change of chi-square
    both drop below 1e-10. Raises FitConvergenceError after
    ``max_iterations``, DegenerateFitError when the Jacobian loses rank.
    """
    obj = _Objective(problem)
    x = obj.project(obj.x0)
    r = obj.residuals(x)
    chi2 = float(r @ r)
    if not np.isfinite(chi2):
        raise ParameterError("model cannot be evaluated at the initial guess")
    initial_norm = np.sqrt(chi2)
    # Keeps the relative-change test meaningful when the optimum has chi2 = 0
    chi2_floor = np.finfo(float).eps * float(np.sum((problem.values / problem.weights) ** 2))
    damping = 1e-3
    trace = []

    for iteration in range(1, max_iterations + 1):
        jac = obj.jacobian(x)
        _check_rank(jac, problem.free)
        a = jac.T @ jac
        g = jac.T @ r
        diag = np.diag(np.diag(a))

        x_new, r_new, chi2_new = x, r, chi2
        while damping < 1e16:
            try:
                step = np.linalg.solve(a + damping * diag, -g)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            candidate = obj.project(x + step)
            r_try = obj.residuals(candidate)
            chi2_try = float(r_try @ r_try)
            if chi2_try <= chi2:
                x_new, r_new, chi2_new = candidate, r_try, chi2_try
                damping = max(damping / 10.0, 1e-12)
                break
            damping *= 10.0

        # Coordinates are in units of the starting scale, so 1 is the natural floor
        rel_step = np.linalg.norm(x_new - x) / max(np.linalg.norm(x), 1.0)
        rel_change = abs(chi2 - chi2_new) / max(chi2, chi2_floor, np.finfo(float).tiny)
        x, r, chi2 = x_new, r_new, chi2_new
        trace.append({"iteration": iteration, "chi2": chi2, "damping": damping,
                      "params": {n: float(v) for n, v in zip(problem.free, x * obj.scale)}})
        logger.debug("iter %d chi2=%.6g step=%.3g damping=%.3g", iteration, chi2, rel_step, damping)
        if rel_step < TOLERANCE and rel_change < TOLERANCE:
            break
    else:
        raise FitConvergenceError(f"no convergence after {max_iterations} iterations", trace)

    jac = obj.jacobian(x)
    _check_rank(jac, problem.free)
    cov = np.linalg.inv(jac.T @ jac) * np.outer(obj.scale, obj.scale)
    dof = problem.values.size - len(problem.free)
    if not problem.absolute_sigma and dof > 0:
        cov = cov * chi2 / dof
    best = obj.params(x)
    return FitResult(
        params=best,
        values={n: float(getattr(best, n)) for n in problem.free},
        uncertainties={n: float(np.sqrt(max(cov[i, i], 0.0))) for i, n in enumerate(problem.free)},
        residual_norm=float(np.sqrt(chi2)),
        initial_residual_norm=float(initial_norm),
        iterations=len(trace),
        covariance=cov,
        kind=problem.kind,
        trace=trace,
    )


def synthesize_fit_data(params: EitParameters, frequencies_hz, kind: CurveKind = CurveKind.BENCHMARK_CV,
                        noise_fraction: float = 0.0, seed: Optional[int] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Model values with optional multiplicative Gaussian scatter.

    Returns (values, sigma); sigma is None for noiseless data.
    """
    clean = model_values(params, frequencies_hz, kind)
    if noise_fraction <= 0:
        return clean, None
    rng = np.random.default_rng(seed)
    sigma = noise_fraction * np.abs(clean)
    sigma[sigma == 0] = noise_fraction * np.max(np.abs(clean))
    return clean + rng.standard_normal(clean.size) * sigma, sigma


def read_fit_data(path: str) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Read ``freq_hz,value[,sigma]`` rows; returns (freqs, values, sigma or None)."""
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = [h.strip() for h in next(reader, [])]
        if header not in (["freq_hz", "value"], ["freq_hz", "value", "sigma"]):
            raise ParameterError(f"{path}: expected header freq_hz,value[,sigma], got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParameterError(f"{path}:{lineno}: expected {len(header)} columns")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ParameterError(f"{path}:{lineno}: non-numeric value")
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    sigma = data[:, 2] if len(header) == 3 else None
    return data[:, 0], data[:, 1], sigma
