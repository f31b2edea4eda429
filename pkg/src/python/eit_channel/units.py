"""Unit conversions shared by config ingestion and emission.

Everything inside the package works in rad/s; files and the CLI speak Hz.
"""

import math

import numpy as np

TWO_PI = 2.0 * math.pi
SPEED_OF_LIGHT = 299792458.0


def hz_to_rad(f):
    return TWO_PI * np.asarray(f, dtype=float) if np.ndim(f) else TWO_PI * float(f)


def rad_to_hz(omega):
    return np.asarray(omega, dtype=float) / TWO_PI if np.ndim(omega) else float(omega) / TWO_PI


def to_db(variance):
    """Variance ratio to dB (10 log10)."""
    return 10.0 * np.log10(variance)


def from_db(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (float(db) / 10.0)
