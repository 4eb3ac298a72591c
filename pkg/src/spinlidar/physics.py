"""Return physics: Lambertian intensity, range noise, detectability cutoff.

Turns raw buffer samples into kept LiDAR points plus per-frame bookkeeping.
Every beam of a tick ends in exactly one bucket: kept, dropped (beyond max
range or below the sensor's reflectance capability), or missed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .sampler import RawReturns, SensorProfile, TWO_PI
from .spectral import SpectralLibrary

# finalize() reason codes, per beam
KEPT = 0
DROPPED_RANGE = 1
DROPPED_CAPABILITY = 2
MISSED = 3


def lambertian_intensity(r0, incidence):
    """Diffuse return strength: r0 * cos(incidence), clamped to [0, 1]."""
    return np.clip(np.asarray(r0) * np.cos(incidence), 0.0, 1.0)


def capability_threshold(d, d_max: float, r_l_max: float):
    """Minimum reflectance detectable at range d: r_l_max * (d / d_max).

    The division comes first so the stated endpoints are float-exact
    (d == d_max gives exactly r_l_max). Beyond d_max the sensor never
    detects; callers enforce that cutoff separately.
    """
    return r_l_max * (np.asarray(d, dtype=np.float64) / d_max)


def make_rng(seed: int, tick_index: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, tick): ticks are independent
    streams, so per-tick draws never depend on how earlier ticks consumed
    randomness."""
    key = np.array(
        [seed & 0xFFFFFFFFFFFFFFFF, tick_index & 0xFFFFFFFFFFFFFFFF],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def apply_noise(ranges, profile: SensorProfile, rng: np.random.Generator):
    """range + N(0, sigma(range)), sigma(d) = noise_sigma + coeff*d, floored at 0.

    Draws exactly one normal per input element, in order, so a fixed-length
    input keeps the stream aligned regardless of which elements matter.
    """
    r = np.asarray(ranges, dtype=np.float64)
    z = rng.standard_normal(r.shape)
    sigma = profile.noise_sigma + profile.noise_range_coeff * r
    return np.maximum(r + z * sigma, 0.0)


class LidarPoint(NamedTuple):
    x: float
    y: float
    z: float
    range: float
    intensity: float
    theta: float
    phi: float
    ring: int
    instance_id: int
    material_index: int
    timestamp: float


@dataclass
class PointCloud:
    """Kept returns, column-major beam order (channel fastest)."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    range: np.ndarray
    intensity: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    ring: np.ndarray            # int32
    instance_id: np.ndarray     # uint32
    material_index: np.ndarray  # uint8
    timestamp: np.ndarray

    def __len__(self) -> int:
        return self.x.size

    def point(self, k: int) -> LidarPoint:
        return LidarPoint(
            float(self.x[k]), float(self.y[k]), float(self.z[k]),
            float(self.range[k]), float(self.intensity[k]),
            float(self.theta[k]), float(self.phi[k]),
            int(self.ring[k]), int(self.instance_id[k]),
            int(self.material_index[k]), float(self.timestamp[k]),
        )

    @classmethod
    def empty(cls) -> "PointCloud":
        f = lambda dt: np.empty(0, dtype=dt)  # noqa: E731
        return cls(
            x=f(np.float64), y=f(np.float64), z=f(np.float64),
            range=f(np.float64), intensity=f(np.float64),
            theta=f(np.float64), phi=f(np.float64),
            ring=f(np.int32), instance_id=f(np.uint32),
            material_index=f(np.uint8), timestamp=f(np.float64),
        )

    def select(self, mask: np.ndarray) -> "PointCloud":
        return PointCloud(**{name: getattr(self, name)[mask] for name in (
            "x", "y", "z", "range", "intensity", "theta", "phi",
            "ring", "instance_id", "material_index", "timestamp",
        )})

    @classmethod
    def concatenate(cls, clouds: list["PointCloud"]) -> "PointCloud":
        if not clouds:
            return cls.empty()
        cat = lambda name: np.concatenate([getattr(c, name) for c in clouds])  # noqa: E731
        return cls(**{name: cat(name) for name in (
            "x", "y", "z", "range", "intensity", "theta", "phi",
            "ring", "instance_id", "material_index", "timestamp",
        )})


@dataclass
class FrameCounts:
    kept: int = 0
    dropped_range: int = 0
    dropped_capability: int = 0
    missed: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_range + self.dropped_capability

    @property
    def total(self) -> int:
        return self.kept + self.dropped + self.missed

    def add(self, other: "FrameCounts") -> None:
        self.kept += other.kept
        self.dropped_range += other.dropped_range
        self.dropped_capability += other.dropped_capability
        self.missed += other.missed


@dataclass
class FinalizeResult:
    points: PointCloud
    counts: FrameCounts
    reason: np.ndarray  # (N,) uint8 per-beam code, beam-table order


def finalize(raw: RawReturns, lib: SpectralLibrary, profile: SensorProfile,
             rng: np.random.Generator) -> FinalizeResult:
    """Apply intensity, noise, and the detectability rule to one tick.

    A hit is kept iff its noisy range stays within d_max and the capability
    threshold at that noisy range does not exceed the return's Lambertian
    intensity (ties detect). Cartesian coordinates come from the noisy range
    and the beam's spherical direction.
    """
    n = len(raw)
    hit = raw.hit

    table = lib.reflectance_table(profile.wavelength_nm)
    r0 = table[raw.material]
    intensity = lambertian_intensity(r0, raw.incidence)

    # one draw per beam, in table order: alignment is independent of hits
    noisy = apply_noise(np.where(hit, raw.depth, 0.0), profile, rng)
    noisy = np.where(hit, noisy, np.inf)

    in_range = noisy <= profile.d_max
    detected = capability_threshold(noisy, profile.d_max, profile.r_l_max) <= intensity

    reason = np.full(n, MISSED, dtype=np.uint8)
    reason[hit & ~in_range] = DROPPED_RANGE
    reason[hit & in_range & ~detected] = DROPPED_CAPABILITY
    keep = hit & in_range & detected
    reason[keep] = KEPT

    theta = np.mod(raw.azimuth[keep], TWO_PI)
    phi = raw.phi[keep]
    rng_keep = noisy[keep]
    cos_phi = np.cos(phi)
    points = PointCloud(
        x=rng_keep * cos_phi * np.cos(theta),
        y=rng_keep * cos_phi * np.sin(theta),
        z=rng_keep * np.sin(phi),
        range=rng_keep,
        intensity=intensity[keep],
        theta=theta,
        phi=phi,
        ring=raw.j[keep].astype(np.int32),
        instance_id=raw.instance[keep].astype(np.uint32),
        material_index=raw.material[keep].astype(np.uint8),
        timestamp=raw.timestamp[keep],
    )
    counts = FrameCounts(
        kept=int(keep.sum()),
        dropped_range=int((reason == DROPPED_RANGE).sum()),
        dropped_capability=int((reason == DROPPED_CAPABILITY).sum()),
        missed=int((reason == MISSED).sum()),
    )
    return FinalizeResult(points=points, counts=counts, reason=reason)
