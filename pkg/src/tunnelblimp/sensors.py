"""Simulated sensing: forward depth camera reduced to a planar range scan
slice, and the downward infrared altimeter. Noise and dropout are injected
from seeded streams."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import as_rng
from .vehicle import BlimpState
from .world import OutOfTrackError, TunnelMap


@dataclass(frozen=True)
class RangeScan:
    """Planar range scan in the body frame. ranges uses NaN for no-return
    beams; angles ascend symmetrically about the forward axis."""

    angles: np.ndarray
    ranges: np.ndarray
    timestamp: float
    fov: float
    max_range: float

    def finite(self) -> np.ndarray:
        return ~np.isnan(self.ranges)


@dataclass(frozen=True)
class AltitudeReading:
    altitude: float
    valid: bool


def depth_scan(map: TunnelMap, state: BlimpState, fov: float = math.pi / 2,
               n_rays: int = 64, max_range: float = 8.0, noise_sigma: float = 0.0,
               rng=None) -> RangeScan:
    """Cast n_rays over the field of view centered on the blimp heading.

    Returns beyond max_range are NaN; Gaussian range noise is added per
    finite beam. A blimp outside the tunnel yields an all-NaN fault scan.
    """
    if n_rays < 8:
        raise ValueError(f"n_rays must be >= 8, got {n_rays}")
    if not 0.0 < fov <= math.pi:
        raise ValueError(f"fov must be in (0, pi], got {fov}")
    angles = np.linspace(-fov / 2, fov / 2, n_rays)
    try:
        ranges = map.raycast_batch(state.xy, state.yaw + angles, max_range)
    except OutOfTrackError:
        ranges = np.full(n_rays, np.nan)
    if noise_sigma > 0.0:
        rng = as_rng(rng)
        noise = rng.normal(0.0, noise_sigma, size=n_rays)
        noisy = ranges + noise
        # a noisy reading past max_range is a lost return, never negative
        noisy = np.where(noisy > max_range, np.nan, np.maximum(noisy, 1e-3))
        ranges = np.where(np.isnan(ranges), np.nan, noisy)
    return RangeScan(angles=angles, ranges=ranges, timestamp=state.time,
                     fov=fov, max_range=max_range)


def altimeter(state: BlimpState, noise_sigma: float = 0.0, dropout_prob: float = 0.0,
              rng=None) -> AltitudeReading:
    """Infrared altitude measurement of position.z with dropout."""
    rng = as_rng(rng)
    dropped = rng.uniform() < dropout_prob
    noise = rng.normal(0.0, noise_sigma) if noise_sigma > 0.0 else 0.0
    if dropped:
        return AltitudeReading(altitude=math.nan, valid=False)
    return AltitudeReading(altitude=max(0.0, state.position[2] + noise), valid=True)
