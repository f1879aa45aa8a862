"""Diffusion channel model for an N x N array of point transmitters and passive receivers.

All quantities are SI: meters, seconds, molecules and per-cubic-meter densities.
Link indices are zero-based.
"""

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator

logger = logging.getLogger(__name__)

MAX_LINKS = 64

ArrayLike = Union[float, npt.NDArray[np.float64]]


class SystemGeometry(BaseModel):
    """Physical layout of the transmitter/receiver arrays and the medium."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    n_links: int = Field(..., gt=0, le=MAX_LINKS)
    link_distance: float = Field(..., gt=0, description="d, paired transmitter-receiver distance (m)")
    separation: float = Field(..., gt=0, description="r, spacing between adjacent transmitters/receivers (m)")
    receiver_radius: float = Field(..., gt=0, description="rho, passive receiver radius (m)")
    diffusion_coeff: float = Field(..., gt=0, description="D, diffusion coefficient (m^2/s)")

    @model_validator(mode="after")
    def _check_point_receiver(self) -> "SystemGeometry":
        # Uniform concentration inside the receiver needs d >> rho.
        if self.receiver_radius > self.link_distance / 10:
            raise ValueError(
                f"receiver_radius ({self.receiver_radius:g} m) must not exceed "
                f"link_distance/10 ({self.link_distance / 10:g} m)"
            )
        return self

    @property
    def receiver_volume(self) -> float:
        """V_RX = 4/3 pi rho^3."""
        return 4.0 / 3.0 * math.pi * self.receiver_radius**3

    @property
    def peak_time(self) -> float:
        return peak_time(self.link_distance, self.diffusion_coeff)


@dataclass(frozen=True)
class ChannelSnapshot:
    """Channel matrices at the sampling instant and one symbol later.

    Attributes:
        h_now: N x N CIR matrix H(t_p); column j is the response to transmitter j.
        h_prev: N x N CIR matrix H(t_p + T_s), the residue of the previous symbol.
        h_prev_self: Paired-link residue h_jj(t_p + T_s), the diagonal of ``h_prev``.
        symbol_duration: T_s in seconds.
        sampling_time: t_p in seconds.
    """

    h_now: npt.NDArray[np.float64]
    h_prev: npt.NDArray[np.float64]
    h_prev_self: float
    symbol_duration: float
    sampling_time: float

    @property
    def n_links(self) -> int:
        return int(self.h_now.shape[0])

    @property
    def h_diag(self) -> float:
        """Paired-link CIR h_jj(t_p), identical for every link."""
        return float(self.h_now[0, 0])


def pairwise_distance(geom: SystemGeometry, j: int, i: int) -> float:
    """Distance from transmitter ``j`` to receiver ``i``."""
    for name, index in (("j", j), ("i", i)):
        if not 0 <= index < geom.n_links:
            raise ValueError(f"link index {name}={index} out of range for {geom.n_links} links")
    if i == j:
        return geom.link_distance
    return math.sqrt(geom.link_distance**2 + (j - i) ** 2 * geom.separation**2)


def cir(distance: ArrayLike, t: ArrayLike, diffusion_coeff: float) -> ArrayLike:
    """Free-diffusion impulse response sensed by a passive receiver (m^-3).

    Evaluated in the log domain so that very small ``t`` underflows to zero
    instead of producing ``inf * 0``.
    """
    distance_arr = np.asarray(distance, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("impulse response is only defined for t > 0")
    if np.any(distance_arr <= 0):
        raise ValueError("distance must be positive")
    if diffusion_coeff <= 0:
        raise ValueError("diffusion coefficient must be positive")

    spread = 4.0 * diffusion_coeff * t_arr
    value = np.exp(-1.5 * np.log(math.pi * spread) - distance_arr**2 / spread)
    if value.ndim == 0:
        return float(value)
    return value


def peak_time(d: float, diffusion_coeff: float) -> float:
    """Time at which the paired-link response peaks, d^2 / (6D)."""
    if d <= 0 or diffusion_coeff <= 0:
        raise ValueError("distance and diffusion coefficient must be positive")
    return d**2 / (6.0 * diffusion_coeff)


def peak_concentration(geom: SystemGeometry, level: float, i: int, j: int) -> float:
    """Concentration at receiver ``i`` at t_p after ``level`` molecules leave transmitter ``j``."""
    if level < 0:
        raise ValueError("molecule count must be non-negative")
    d = geom.link_distance
    d_ji = pairwise_distance(geom, j, i)
    return level * (3.0 / (2.0 * math.pi * d**2)) ** 1.5 * math.exp(-3.0 * d_ji**2 / (2.0 * d**2))


def paired_peak_concentration(geom: SystemGeometry, level: float) -> float:
    """Closed form of the paired-link peak, S (3 / (2 pi e d^2))^(3/2)."""
    if level < 0:
        raise ValueError("molecule count must be non-negative")
    return level * (3.0 / (2.0 * math.pi * math.e * geom.link_distance**2)) ** 1.5


def _distance_matrix(geom: SystemGeometry) -> npt.NDArray[np.float64]:
    index = np.arange(geom.n_links)
    offset = np.abs(index[:, None] - index[None, :])
    off_diagonal = np.sqrt(geom.link_distance**2 + offset.astype(float) ** 2 * geom.separation**2)
    return np.where(offset == 0, geom.link_distance, off_diagonal)


def _frozen(array: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    array.setflags(write=False)
    return array


def snapshot(geom: SystemGeometry, symbol_duration: float) -> ChannelSnapshot:
    """Sample the channel at t_p and t_p + T_s for every transmitter/receiver pair."""
    if not symbol_duration > 0 or not math.isfinite(symbol_duration):
        raise ValueError("symbol duration must be positive and finite")

    t_p = geom.peak_time
    distances = _distance_matrix(geom)
    h_now = cir(distances, t_p, geom.diffusion_coeff)
    h_prev = cir(distances, t_p + symbol_duration, geom.diffusion_coeff)

    logger.debug(
        f"Channel snapshot: N={geom.n_links}, t_p={t_p:.6g} s, T_s={symbol_duration:g} s, "
        f"h_jj={h_now[0, 0]:.6g}, h_jj(t_p+T_s)={h_prev[0, 0]:.6g}"
    )
    return ChannelSnapshot(
        h_now=_frozen(np.asarray(h_now, dtype=float)),
        h_prev=_frozen(np.asarray(h_prev, dtype=float)),
        h_prev_self=float(h_prev[0, 0]),
        symbol_duration=symbol_duration,
        sampling_time=t_p,
    )
