"""
Gaussian sideband states and the maps the EIT channel applies to them.

Variances are in quantum-noise-limit units (vacuum = 1). Passive loss with
transmissivity eta takes V to eta V + (1 - eta), evaluated as 1 + eta (V - 1)
so vacuum stays exactly at 1; pump-probe coupling adds
kappa (V_pump - 1) on top, per quadrature, with no cross-quadrature terms.
"""

import dataclasses
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractViolationError, InvalidParametersError
from .medium import ChannelResponse
from .units import from_db, to_db

# Round-off slack on the V >= 1 invariant
_VARIANCE_TOLERANCE = 1e-12


class Quadrature(str, Enum):
    AMPLITUDE = "amplitude"
    PHASE = "phase"


@dataclass(frozen=True)
class GaussianSidebandState:
    frequency: float
    mean_amp: complex = 0j
    mean_phase: complex = 0j
    var_amp: float = 1.0
    var_phase: float = 1.0

    def __post_init__(self):
        for name in ("var_amp", "var_phase"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 1.0 - _VARIANCE_TOLERANCE:
                raise InvalidParametersError(f"{name} must be >= 1 (no squeezed states), got {v!r}")
        if self.var_amp * self.var_phase < 1.0 - _VARIANCE_TOLERANCE:
            raise InvalidParametersError("var_amp * var_phase must be >= 1")

    @classmethod
    def coherent(cls, frequency: float, mean_amp: complex = 0j, mean_phase: complex = 0j) -> "GaussianSidebandState":
        return cls(frequency=frequency, mean_amp=mean_amp, mean_phase=mean_phase)

    def variance(self, quadrature: Quadrature) -> float:
        return self.var_amp if Quadrature(quadrature) is Quadrature.AMPLITUDE else self.var_phase

    def mean(self, quadrature: Quadrature) -> complex:
        return self.mean_amp if Quadrature(quadrature) is Quadrature.AMPLITUDE else self.mean_phase

    def snr(self, quadrature: Quadrature) -> float:
        return abs(self.mean(quadrature)) ** 2 / self.variance(quadrature)


@dataclass(frozen=True)
class NoiseInjection:
    """Lumped excess noise added after the passive loss."""

    coupling_amp: float = 0.0
    coupling_phase: float = 0.0
    pump_var_amp: float = 1.0
    pump_var_phase: float = 1.0
    extra_var_amp: float = 0.0
    extra_var_phase: float = 0.0
    # Inject ahead of the loss so the excess is attenuated with the probe
    through_loss: bool = False

    def __post_init__(self):
        for name in ("coupling_amp", "coupling_phase"):
            k = getattr(self, name)
            if not 0.0 <= k <= 1.0:
                raise InvalidParametersError(f"{name} must lie in [0, 1], got {k!r}")
        for name in ("pump_var_amp", "pump_var_phase"):
            if not getattr(self, name) >= 1.0:
                raise InvalidParametersError(f"{name} must be >= 1")
        for name in ("extra_var_amp", "extra_var_phase"):
            if not getattr(self, name) >= 0.0:
                raise InvalidParametersError(f"{name} must be >= 0")

    @classmethod
    def none(cls) -> "NoiseInjection":
        return cls()

    @classmethod
    def pump(cls, coupling_amp: float, coupling_phase: float, pump_db: float = 7.0) -> "NoiseInjection":
        """Pump-probe coupling with pump noise ``pump_db`` above the QNL in both quadratures."""
        level = from_db(pump_db)
        return cls(coupling_amp=coupling_amp, coupling_phase=coupling_phase,
                   pump_var_amp=level, pump_var_phase=level)

    def added_variance(self, quadrature: Quadrature) -> float:
        if Quadrature(quadrature) is Quadrature.AMPLITUDE:
            return self.coupling_amp * (self.pump_var_amp - 1.0) + self.extra_var_amp
        return self.coupling_phase * (self.pump_var_phase - 1.0) + self.extra_var_phase

    def added_variance_at(self, quadrature: Quadrature, eta):
        """Excess seen at the output for transmissivity ``eta``."""
        added = self.added_variance(quadrature)
        return added * eta if self.through_loss else added

    @property
    def is_zero(self) -> bool:
        return self.added_variance(Quadrature.AMPLITUDE) == 0.0 and self.added_variance(Quadrature.PHASE) == 0.0


def excess_noise_db(inj: NoiseInjection, quadrature: Quadrature) -> float:
    """Excess noise of a vacuum input in dB above the QNL."""
    return float(to_db(1.0 + inj.added_variance(quadrature)))


def apply_passive(state: GaussianSidebandState, response: ChannelResponse) -> GaussianSidebandState:
    if response.is_grid:
        raise ContractViolationError("apply_passive needs a single-frequency ChannelResponse")
    if not np.isclose(state.frequency, response.frequency, rtol=1e-12, atol=1e-9):
        raise ContractViolationError(
            f"state at {state.frequency!r} rad/s but response at {response.frequency!r} rad/s")

    eta = float(response.intensity_transmissivity)
    t = response.amplitude_transfer
    return dataclasses.replace(
        state,
        mean_amp=t * state.mean_amp,
        mean_phase=t * state.mean_phase,
        var_amp=1.0 + eta * (state.var_amp - 1.0),
        var_phase=1.0 + eta * (state.var_phase - 1.0),
    )


def apply_injection(state: GaussianSidebandState, inj: NoiseInjection) -> GaussianSidebandState:
    return dataclasses.replace(
        state,
        var_amp=state.var_amp + inj.added_variance(Quadrature.AMPLITUDE),
        var_phase=state.var_phase + inj.added_variance(Quadrature.PHASE),
    )


def end_to_end(state: GaussianSidebandState, response: ChannelResponse, inj: NoiseInjection) -> GaussianSidebandState:
    """Passive loss first, then the lumped injection; the reverse order when ``inj.through_loss``."""
    if inj.through_loss:
        return apply_passive(apply_injection(state, inj), response)
    return apply_injection(apply_passive(state, response), inj)
