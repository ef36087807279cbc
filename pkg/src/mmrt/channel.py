"""Narrowband MIMO channel assembly and single-stream SVD beamforming.

The channel matrix for one timestep is the sum over multipath components of
``alpha_k * a_rx(aoa_k) @ a_tx(aod_k)^H`` with ``alpha_k`` the complex
amplitude 10^(gain_db/20) * exp(j*phase). A single matrix is formed at the
carrier frequency; the bandwidth only enters the noise power.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .tracer import SPEED_OF_LIGHT_M_S

THERMAL_NOISE_DBM_PER_HZ = -174.0


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform planar array of omni elements.

    Elements sit on the plane orthogonal to ``boresight``, spanned by the
    projected ``up`` vector (row direction) and ``up x boresight`` (column
    direction), spaced ``element_spacing_wavelengths`` apart. Element 0 is
    the phase reference; ordering is row-major.
    """

    rows: int
    cols: int
    element_spacing_wavelengths: float = 0.5
    boresight: tuple[float, float, float] = (1.0, 0.0, 0.0)
    up: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.rows * self.cols < 1:
            raise ValueError("array needs at least one element")
        if self.element_spacing_wavelengths <= 0.0:
            raise ValueError("element spacing must be positive")

    @property
    def num_elements(self) -> int:
        return self.rows * self.cols

    def element_positions_m(self, wavelength_m: float) -> np.ndarray:
        b = np.asarray(self.boresight, dtype=float)
        b = b / np.linalg.norm(b)
        u = np.asarray(self.up, dtype=float)
        u = u - np.dot(u, b) * b
        norm = np.linalg.norm(u)
        if norm == 0.0:
            raise ValueError("up vector must not be parallel to boresight")
        u = u / norm
        r = np.cross(u, b)
        d = self.element_spacing_wavelengths * wavelength_m
        rows = np.arange(self.rows)
        cols = np.arange(self.cols)
        grid = rows[:, None, None] * u + cols[None, :, None] * r
        return (d * grid).reshape(self.num_elements, 3)


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 5.0
    bandwidth_hz: float = 400e6
    carrier_frequency_hz: float = 60e9

    def __post_init__(self):
        if self.bandwidth_hz <= 0.0:
            raise ValueError("bandwidth must be positive")
        if self.carrier_frequency_hz <= 0.0:
            raise ValueError("carrier frequency must be positive")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / self.carrier_frequency_hz


def noise_power_dbm(budget: LinkBudget) -> float:
    """Thermal noise floor plus noise figure over the full bandwidth."""
    return (THERMAL_NOISE_DBM_PER_HZ
            + 10.0 * math.log10(budget.bandwidth_hz)
            + budget.noise_figure_db)


def steering_vector(array: ArrayConfig, direction: tuple[float, float],
                    wavelength_m: float) -> np.ndarray:
    """Complex array response toward (azimuth, elevation), unit magnitudes."""
    az, el = direction
    u = np.array([math.cos(el) * math.cos(az),
                  math.cos(el) * math.sin(az),
                  math.sin(el)])
    pos = array.element_positions_m(wavelength_m)
    phase = (2.0 * math.pi / wavelength_m) * (pos @ u)
    return np.exp(1j * phase)


def assemble_channel(mpcs, tx_array: ArrayConfig, rx_array: ArrayConfig,
                     wavelength_m: float) -> np.ndarray:
    """Sum the multipath components into an (rx_elements x tx_elements) matrix.

    Accepts anything with ``gain_db``, ``phase_rad``, ``aod`` and ``aoa``
    attributes. No components means a zero matrix (outage).
    """
    h = np.zeros((rx_array.num_elements, tx_array.num_elements), dtype=complex)
    for m in mpcs:
        alpha = 10.0 ** (m.gain_db / 20.0) * np.exp(1j * m.phase_rad)
        a_rx = steering_vector(rx_array, m.aoa, wavelength_m)
        a_tx = steering_vector(tx_array, m.aod, wavelength_m)
        h += alpha * np.outer(a_rx, a_tx.conj())
    return h


def largest_singular_value(h: np.ndarray) -> float:
    return float(np.linalg.svd(h, compute_uv=False)[0])


def beamforming_snr_db(h: np.ndarray, budget: LinkBudget) -> float:
    """SNR of the optimal rank-1 transmit/receive pair, -inf on outage."""
    s1 = largest_singular_value(h)
    if s1 == 0.0:
        return float("-inf")
    return budget.tx_power_dbm + 20.0 * math.log10(s1) - noise_power_dbm(budget)


@dataclass(frozen=True)
class SnrPoint:
    timestep: int
    snr_db: float
    num_mpcs: int
    sigma1: float


def snr_series(mpcs_per_timestep, budget: LinkBudget, tx_array: ArrayConfig,
               rx_array: ArrayConfig) -> list[SnrPoint]:
    """Per-timestep beamforming SNR for a whole trace."""
    lam = budget.wavelength_m
    out = []
    for t, mpcs in enumerate(mpcs_per_timestep):
        h = assemble_channel(mpcs, tx_array, rx_array, lam)
        s1 = largest_singular_value(h)
        snr = beamforming_snr_db(h, budget)
        out.append(SnrPoint(t, snr, len(mpcs), s1))
    return out


def timed_snr_series(mpcs_per_timestep, budget: LinkBudget, tx_array: ArrayConfig,
                     rx_array: ArrayConfig) -> tuple[list[SnrPoint], float]:
    """snr_series plus its wall-clock compute time (no file I/O included)."""
    t0 = time.perf_counter()
    points = snr_series(mpcs_per_timestep, budget, tx_array, rx_array)
    return points, time.perf_counter() - t0
