"""Multi-tone global drive: tone basis, amplitudes, waveform synthesis and export.

Internal units: frequencies in nu1, times in 1/nu1 (so one COM period is 2 pi).
"""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, SpeedLimit

DEFAULT_MARGIN = 0.35


@dataclass(frozen=True)
class ToneBasis:
    T: float
    omega: np.ndarray
    phi: np.ndarray
    index: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigError("gate time must be positive")
        om = np.asarray(self.omega, dtype=float)
        if om.ndim != 1 or len(om) == 0:
            raise ConfigError("need at least one tone")
        if np.any(om <= 0) or np.any(np.diff(om) <= 0):
            raise ConfigError("tone frequencies must be positive and strictly increasing")
        if np.shape(self.phi) != om.shape:
            raise ConfigError("phi must match omega")

    @property
    def M(self):
        return len(self.omega)

    @property
    def is_harmonic(self):
        return self.index is not None and np.allclose(np.cos(self.omega * self.T + self.phi), 0.0, atol=1e-12)

    def with_phases(self, phi):
        phi = np.broadcast_to(np.asarray(phi, dtype=float), self.omega.shape).copy()
        return ToneBasis(self.T, self.omega, phi, self.index)


@dataclass(frozen=True)
class AmplitudeVector:
    """Signed tone amplitudes ``r`` and Rabi scale ``Omega`` (units of nu1)."""

    r: np.ndarray
    Omega: float = 1.0

    @property
    def effective(self):
        return self.Omega * np.asarray(self.r, dtype=float)


def tone_indices(T, nu_min, nu_max, margin=DEFAULT_MARGIN):
    lo = (nu_min - margin) * T / (2 * np.pi)
    hi = (nu_max + margin) * T / (2 * np.pi)
    # Round first so 7.000000000001 counts as 7.
    n0 = max(1, int(np.ceil(np.round(lo, 9))))
    n1 = int(np.floor(np.round(hi, 9)))
    return np.arange(n0, n1 + 1)


def harmonic_basis(T, modes, margin=DEFAULT_MARGIN, allow_fast=False):
    """Tones omega_n = 2 pi n / T with phase pi/2 covering [min nu - margin, max nu + margin]."""
    if not T > 0:
        raise ConfigError("gate time must be positive")
    # The limit itself is included: half a COM period is already too fast.
    if T <= np.pi * (1 + 1e-12) and not allow_fast:
        raise SpeedLimit(f"T = {T:.4g} / nu1 is not above the pi / nu1 speed limit")
    n = tone_indices(T, modes.nu.min(), modes.nu.max(), margin)
    if len(n) == 0:
        raise ConfigError("no harmonic tones fall in the requested band")
    omega = 2 * np.pi * n / T
    return ToneBasis(T, omega, np.full(len(n), np.pi / 2), n)


def explicit_basis(T, n, phase=np.pi / 2):
    n = np.asarray(n, dtype=int)
    return ToneBasis(T, 2 * np.pi * n / T, np.full(len(n), float(phase)), n)


def waveform(tones, amps, t):
    """Omega * sum_i r_i cos(omega_i t + phi_i) sampled at ``t``."""
    t = np.asarray(t, dtype=float)
    if tones.index is None:
        return np.cos(np.multiply.outer(t, tones.omega) + tones.phi) @ amps.effective
    # Reduce n t / T mod 1 so the edges t = 0, T hit sin(0) exactly.
    x = 2 * np.pi * np.mod(np.multiply.outer(t / tones.T, tones.index), 1.0)
    quad = tones.phi == np.pi / 2
    vals = np.where(quad, -np.sin(x), np.cos(x + tones.phi))
    return vals @ amps.effective


def peak_metrics(amps):
    one = float(np.sum(np.abs(amps.r)))
    return {"one_norm": one, "peak_power_proxy": float(amps.Omega**2 * one**2)}


def write_spectrum(path, tones, amps):
    n = tones.index if tones.index is not None else np.arange(1, tones.M + 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tone_index", "omega_over_nu1", "r_n"])
        for k, om, r in zip(n, tones.omega, amps.effective):
            w.writerow([int(k), f"{float(om):.17g}", f"{float(r):.17g}"])


def read_spectrum(path):
    n, om, r = [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            n.append(int(row["tone_index"]))
            om.append(float(row["omega_over_nu1"]))
            r.append(float(row["r_n"]))
    return np.array(n), np.array(om), np.array(r)


def write_waveform(path, tones, amps, n_samples=1001):
    t = np.linspace(0.0, tones.T, n_samples)
    s = waveform(tones, AmplitudeVector(amps.r, 1.0), t)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_over_T", "amplitude_over_Omega"])
        for a, b in zip(t / tones.T, s):
            w.writerow([f"{a:.17g}", f"{b:.17g}"])
