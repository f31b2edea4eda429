"""
Λ-system EIT medium

Probe susceptibility of a three-level Λ medium driven by a strong pump,

    chi(w) = i 2 N|g|^2 (g0 - i w) / (c k [(g0 - i w)(g - i w) + |g E_c|^2])

and the linear channel it imposes on probe sidebands: intensity
transmissivity eta = exp(-k L Im chi), phase phi = (k L / 2) Re chi and
group delay tau_g = d(phi)/dw.

All frequencies are angular (rad/s). N and g only ever appear as the
product N|g|^2, stored as ``optical_depth_rate``.
"""

import dataclasses
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DegenerateParametersError, InvalidParametersError
from .units import SPEED_OF_LIGHT, TWO_PI

# Rb-87 D1 line, 794.979 nm
RB87_D1_WAVENUMBER = TWO_PI / 794.978851e-9

ArrayLike = Union[float, np.ndarray]


def _unwrap(value):
    """0-d arrays back to plain Python scalars."""
    if isinstance(value, np.ndarray) and value.ndim == 0:
        return value.item()
    return value


@dataclass(frozen=True)
class EitParameters:
    optical_depth_rate: float      # N|g|^2
    spontaneous_rate: float        # gamma, rad/s
    dephasing_rate: float          # gamma_0, rad/s
    pump_rabi: float               # |g E_c|, rad/s
    wavenumber: float = RB87_D1_WAVENUMBER
    medium_length: float = 0.075
    light_speed: float = SPEED_OF_LIGHT
    atomic_density: Optional[float] = None
    coupling_constant: Optional[float] = None

    def __post_init__(self):
        checks = [
            (self.spontaneous_rate > 0, "spontaneous_rate must be > 0"),
            (self.dephasing_rate >= 0, "dephasing_rate must be >= 0"),
            (self.pump_rabi > 0, "pump_rabi must be > 0"),
            (self.wavenumber > 0, "wavenumber must be > 0"),
            (self.medium_length > 0, "medium_length must be > 0"),
            (self.light_speed > 0, "light_speed must be > 0"),
            (self.optical_depth_rate >= 0, "optical_depth_rate must be >= 0"),
        ]
        for name in ("optical_depth_rate", "spontaneous_rate", "dephasing_rate", "pump_rabi",
                     "wavenumber", "medium_length", "light_speed"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidParametersError(f"{name} must be finite, got {getattr(self, name)!r}")
        for ok, msg in checks:
            if not ok:
                raise InvalidParametersError(msg)

        if (self.atomic_density is None) != (self.coupling_constant is None):
            raise InvalidParametersError("atomic_density and coupling_constant must be given together")
        if self.atomic_density is not None:
            product = self.atomic_density * abs(self.coupling_constant) ** 2
            if not np.isclose(product, self.optical_depth_rate, rtol=1e-12, atol=0.0):
                raise InvalidParametersError(
                    f"optical_depth_rate {self.optical_depth_rate!r} does not match N|g|^2 = {product!r}")

    @classmethod
    def from_density(cls, atomic_density: float, coupling_constant: float, **kwargs) -> "EitParameters":
        return cls(optical_depth_rate=atomic_density * abs(coupling_constant) ** 2,
                   atomic_density=atomic_density, coupling_constant=coupling_constant, **kwargs)

    @classmethod
    def from_group_delay(cls, delay: float, **kwargs) -> "EitParameters":
        """Solve N|g|^2 so that the zero-dephasing, zero-frequency delay equals ``delay``."""
        if delay < 0:
            raise InvalidParametersError("delay must be >= 0")
        c = kwargs.get("light_speed", SPEED_OF_LIGHT)
        length = kwargs.get("medium_length", cls.medium_length)
        rabi = kwargs["pump_rabi"]
        return cls(optical_depth_rate=delay * c * rabi ** 2 / length, **kwargs)

    def replace(self, **changes) -> "EitParameters":
        if "optical_depth_rate" in changes:
            changes.setdefault("atomic_density", None)
            changes.setdefault("coupling_constant", None)
        return dataclasses.replace(self, **changes)

    @property
    def zero_dephasing_delay(self) -> float:
        """tau_g(0) for gamma_0 = 0: N|g|^2 L / (c |g E_c|^2)."""
        return self.optical_depth_rate * self.medium_length / (self.light_speed * self.pump_rabi ** 2)

    @property
    def group_velocity(self) -> float:
        delay = self.zero_dephasing_delay
        return float("inf") if delay == 0 else self.medium_length / delay

    @property
    def window_halfwidth(self) -> float:
        """Angular frequency where eta drops to 1/e (gamma_0 = 0, small-w expansion)."""
        delay = self.zero_dephasing_delay
        if delay == 0:
            return float("inf")
        return self.pump_rabi / np.sqrt(2.0 * delay * self.spontaneous_rate)


@dataclass(frozen=True)
class ChannelResponse:
    """Per-frequency linear response of the medium.

    Fields hold scalars for a single sideband or equal-length arrays for a
    sweep. ``amplitude_transfer`` is derived so eta = |t|^2 holds by
    construction.
    """

    frequency: ArrayLike
    intensity_transmissivity: ArrayLike
    phase: ArrayLike
    group_delay: ArrayLike = 0.0
    chi: Optional[ArrayLike] = None

    def __post_init__(self):
        eta = np.asarray(self.intensity_transmissivity, dtype=float)
        if np.any(~np.isfinite(eta)) or np.any(eta < 0.0) or np.any(eta > 1.0):
            raise InvalidParametersError("intensity_transmissivity must lie in [0, 1]")
        if np.shape(self.frequency) != eta.shape or np.shape(self.phase) != eta.shape:
            raise InvalidParametersError("frequency, transmissivity and phase shapes differ")

    @classmethod
    def beamsplitter(cls, eta: ArrayLike, frequency: ArrayLike = 0.0) -> "ChannelResponse":
        """Dispersionless passive loss with transmissivity ``eta``."""
        eta = _unwrap(np.asarray(eta, dtype=float))
        frequency = _unwrap(np.broadcast_to(np.asarray(frequency, dtype=float), np.shape(eta)).copy())
        zeros = _unwrap(np.zeros(np.shape(eta)))
        return cls(frequency=frequency, intensity_transmissivity=eta, phase=zeros, group_delay=zeros)

    @property
    def amplitude_transfer(self) -> ArrayLike:
        t = np.sqrt(np.asarray(self.intensity_transmissivity, dtype=float)) * np.exp(1j * np.asarray(self.phase))
        return _unwrap(t)

    @property
    def is_grid(self) -> bool:
        return np.ndim(self.intensity_transmissivity) > 0

    def __len__(self) -> int:
        return int(np.size(self.intensity_transmissivity)) if self.is_grid else 1

    def at(self, index: int) -> "ChannelResponse":
        if not self.is_grid:
            return self
        pick = lambda v: None if v is None else _unwrap(np.asarray(v)[index])
        return ChannelResponse(frequency=pick(self.frequency),
                               intensity_transmissivity=pick(self.intensity_transmissivity),
                               phase=pick(self.phase),
                               group_delay=pick(np.broadcast_to(self.group_delay, np.shape(self.phase))),
                               chi=pick(self.chi))


def _terms(params: EitParameters, omega: ArrayLike):
    w = np.asarray(omega, dtype=float)
    a = params.dephasing_rate - 1j * w
    b = params.spontaneous_rate - 1j * w
    rabi2 = params.pump_rabi ** 2
    inner = a * b + rabi2
    guard = np.finfo(float).eps * (np.abs(a) * np.abs(b) + rabi2)
    if np.any(np.abs(inner) <= guard):
        raise DegenerateParametersError(
            "susceptibility denominator vanishes; check spontaneous_rate, dephasing_rate and pump_rabi")
    return a, inner, rabi2


def susceptibility(params: EitParameters, omega: ArrayLike):
    """Probe susceptibility chi(w). Accepts a scalar or an array of rad/s."""
    a, inner, _ = _terms(params, omega)
    chi = 2j * params.optical_depth_rate * a / (params.light_speed * params.wavenumber * inner)
    return _unwrap(chi)


def _phase(params: EitParameters, chi):
    return 0.5 * params.wavenumber * params.medium_length * np.real(chi)


def group_delay(params: EitParameters, omega: ArrayLike):
    """Closed-form tau_g = d(phi)/dw.

    d(chi)/dw = -2 N|g|^2 (a^2 - |gE_c|^2) / (c k D^2) with a = g0 - i w and D
    the bracketed denominator, so tau_g = -(N|g|^2 L / c) Re[(a^2 - |gE_c|^2) / D^2].
    """
    a, inner, rabi2 = _terms(params, omega)
    scale = params.optical_depth_rate * params.medium_length / params.light_speed
    return _unwrap(-scale * np.real((a * a - rabi2) / (inner * inner)))


def group_delay_numeric(params: EitParameters, omega: ArrayLike, step: float = 1.0):
    """Central finite difference of the phase response, for cross-checking."""
    w = np.asarray(omega, dtype=float)
    upper = _phase(params, susceptibility(params, w + step))
    lower = _phase(params, susceptibility(params, w - step))
    return _unwrap((upper - lower) / (2.0 * step))


def channel_response(params: EitParameters, omega: ArrayLike) -> ChannelResponse:
    chi = susceptibility(params, omega)
    eta = np.exp(-params.wavenumber * params.medium_length * np.imag(chi))
    # Im chi >= 0 analytically; clamp the last ulp of round-off
    eta = np.minimum(eta, 1.0)
    return ChannelResponse(frequency=_unwrap(np.asarray(omega, dtype=float)),
                           intensity_transmissivity=_unwrap(eta),
                           phase=_unwrap(_phase(params, chi)),
                           group_delay=group_delay(params, omega),
                           chi=chi)
