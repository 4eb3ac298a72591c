"""Beam table generation and frame-buffer sampling.

The sensor fires columns of beams at fixed azimuth steps while spinning about
+z. Each tick owns the half-open azimuth interval swept during its dt; every
beam is projected into the capture covering its azimuth and reads the nearest
pixel of that capture's buffers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FrustumError
from .render import CameraIntrinsics, FrameBuffers, CapturePlan, rasterize
from .geometry import Pose
from .scene import Scene

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SensorProfile:
    """Full parameterization of one spinning LiDAR."""

    channels: int = 128
    samples_per_rev: int = 1024
    fov_h: float = TWO_PI
    fov_v: float = math.pi / 2.0
    elevation_table: np.ndarray | None = None
    spin_rate: float = 10.0          # Hz
    wavelength_nm: float = 850.0
    W: int = 1024
    d_max: float = 50.0              # meters
    r_l_max: float = 0.8             # reflectance needed for a return at d_max
    noise_sigma: float = 0.0         # meters, constant term
    noise_range_coeff: float = 0.0   # meters of sigma per meter of range
    seed: int = 0

    def __post_init__(self):
        if self.channels < 1:
            raise ValueError("channels must be >= 1")
        if self.samples_per_rev < 1:
            raise ValueError("samples_per_rev must be >= 1")
        if not (0.0 < self.fov_h <= TWO_PI):
            raise ValueError("fov_h must be in (0, 2*pi]")
        if not (0.0 < self.fov_v < math.pi):
            raise ValueError("fov_v must be in (0, pi)")
        if self.spin_rate <= 0.0:
            raise ValueError("spin_rate must be positive")
        if self.d_max <= 0.0:
            raise ValueError("d_max must be positive")
        if not (0.0 < self.r_l_max <= 1.0):
            raise ValueError("r_l_max must be in (0, 1]")
        if self.noise_sigma < 0.0 or self.noise_range_coeff < 0.0:
            raise ValueError("noise parameters must be non-negative")
        if self.elevation_table is not None:
            table = np.ascontiguousarray(self.elevation_table, dtype=np.float64)
            object.__setattr__(self, "elevation_table", table)
            if table.shape != (self.channels,):
                raise ValueError(
                    f"elevation_table length {table.size} != channels {self.channels}"
                )
            if np.any(np.abs(table) > self.fov_v / 2.0 + 1e-12):
                raise ValueError("elevation_table values outside +/- fov_v/2")

    @property
    def azimuth_step(self) -> float:
        return self.fov_h / self.samples_per_rev

    @property
    def revolution_period(self) -> float:
        return 1.0 / self.spin_rate

    def elevations(self) -> np.ndarray:
        """Per-channel elevation angles, ascending with channel index."""
        if self.elevation_table is not None:
            return self.elevation_table
        if self.channels == 1:
            return np.zeros(1, dtype=np.float64)
        half = self.fov_v / 2.0
        return np.linspace(-half, half, self.channels)


def os0_128(**overrides) -> SensorProfile:
    """128-channel, 90-degree vertical FOV, 10 Hz spinning profile.

    1024 columns per revolution at 850 nm; 50 m maximum range reached at 0.8
    target reflectance. Noise off by default.
    """
    return SensorProfile(**overrides)


@dataclass
class BeamTable:
    """One tick's beams, column-major: channel j varies fastest.

    azimuth is unwrapped (monotone across revolutions) in the sensor frame.
    """

    i: np.ndarray           # (N,) int32 column index within the revolution
    j: np.ndarray           # (N,) int32 channel index
    azimuth: np.ndarray     # (N,) float64 radians, unwrapped
    phi: np.ndarray         # (N,) float64 radians
    timestamp: np.ndarray   # (N,) float64 seconds
    column_count: int

    def __len__(self) -> int:
        return self.azimuth.size


def revolution_of(azimuth) -> np.ndarray:
    """Revolution index of an unwrapped azimuth.

    Column azimuths sit at least one column step away from the next turn
    boundary, so a 1e-9 nudge absorbs the rounding of az/(2*pi) without ever
    reaching the following revolution.
    """
    return np.floor(np.asarray(azimuth, dtype=np.float64) / TWO_PI + 1e-9).astype(np.int64)


def column_azimuth(profile: SensorProfile, g) -> np.ndarray:
    """Unwrapped azimuth of global column g (revolution r = g // samples).

    Every tick evaluates this same expression, so half-open interval tests
    partition columns across ticks without gaps or duplicates.
    """
    g = np.asarray(g, dtype=np.int64)
    r, i = np.divmod(g, np.int64(profile.samples_per_rev))
    return r * TWO_PI + i * profile.azimuth_step


def _first_column_at_or_after(profile: SensorProfile, azimuth: float) -> int:
    """Smallest global column g with column_azimuth(g) >= azimuth."""
    step = profile.azimuth_step
    g = int(math.floor(azimuth / step))  # close; fix up exactly below
    while column_azimuth(profile, g) >= azimuth:
        g -= 1
    while column_azimuth(profile, g) < azimuth:
        g += 1
    return g


def beam_table(profile: SensorProfile, sweep_start: float, sweep_end: float,
               t0: float, dt: float) -> BeamTable:
    """All beams whose column azimuth lies in [sweep_start, sweep_end).

    Column timestamps are linear in azimuth: t = t0 + (az - start)/(2*pi*spin).
    All channels of a column share its timestamp.
    """
    if not (sweep_end > sweep_start):
        raise ValueError("sweep_end must exceed sweep_start")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    g_lo = _first_column_at_or_after(profile, sweep_start)
    g_hi = _first_column_at_or_after(profile, sweep_end)
    cols = np.arange(g_lo, g_hi, dtype=np.int64)
    n_cols = cols.size
    C = profile.channels

    az_cols = column_azimuth(profile, cols)
    t_cols = t0 + (az_cols - sweep_start) / (TWO_PI * profile.spin_rate)
    i_cols = (cols % profile.samples_per_rev).astype(np.int32)
    phi = profile.elevations()

    return BeamTable(
        i=np.repeat(i_cols, C),
        j=np.tile(np.arange(C, dtype=np.int32), n_cols),
        azimuth=np.repeat(az_cols, C),
        phi=np.tile(phi, n_cols),
        timestamp=np.repeat(t_cols, C),
        column_count=n_cols,
    )


def beam_to_pixel(theta, phi, intr: CameraIntrinsics):
    """Project a beam direction to fractional pixel coordinates.

    theta is azimuth relative to the capture's optical axis; phi elevation.
    n_x = f_x*tan(theta) + c_u; n_y = c_v - f_y*tan(phi)/cos(theta). The
    caller picks the nearest pixel. Raises FrustumError if any beam falls
    outside the frame (valid iff -0.5 <= n < W - 0.5 on both axes).
    """
    theta_a = np.asarray(theta, dtype=np.float64)
    phi_a = np.asarray(phi, dtype=np.float64)
    half = intr.fov_c / 2.0
    if np.any(np.abs(theta_a) >= half):
        worst = float(np.max(np.abs(theta_a)))
        raise FrustumError(
            f"beam azimuth {math.degrees(worst):.3f} deg outside capture "
            f"half-FOV {math.degrees(half):.3f} deg"
        )
    n_x = intr.f_x * np.tan(theta_a) + intr.c_u
    n_y = intr.c_v - intr.f_y * np.tan(phi_a) / np.cos(theta_a)
    lo, hi = -0.5, intr.W - 0.5
    bad = (n_x < lo) | (n_x >= hi) | (n_y < lo) | (n_y >= hi)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise FrustumError(
            f"beam projects outside the {intr.W}px frame: "
            f"(n_x, n_y) = ({np.ravel(n_x)[k] if n_x.ndim else float(n_x):.2f}, "
            f"{np.ravel(n_y)[k] if n_y.ndim else float(n_y):.2f})"
        )
    if theta_a.ndim == 0 and phi_a.ndim == 0:
        return float(n_x), float(n_y)
    return n_x, n_y


def nearest_pixel(n: np.ndarray) -> np.ndarray:
    """Nearest integer pixel for fractional coordinate(s): floor(n + 0.5)."""
    return np.floor(np.asarray(n) + 0.5).astype(np.int64)


@dataclass
class TickFrames:
    """All captures rendered for one tick, with their azimuth ownership."""

    plan: CapturePlan
    sweep_start: float
    frames: list[FrameBuffers] = field(default_factory=list)


def render_tick(scene: Scene, pose: Pose, plan: CapturePlan,
                sweep_start: float) -> TickFrames:
    """Rasterize every capture of the plan at its absolute yaw."""
    tick = TickFrames(plan=plan, sweep_start=sweep_start)
    for cap in plan.captures:
        tick.frames.append(
            rasterize(scene, sweep_start + cap.yaw, pose, cap.intrinsics)
        )
    return tick


@dataclass
class RawReturns:
    """Per-beam buffer samples, in beam-table order. Misses keep depth=inf."""

    depth: np.ndarray        # (N,) float64, inf for miss
    incidence: np.ndarray    # (N,) float64
    material: np.ndarray     # (N,) uint8
    instance: np.ndarray     # (N,) uint32
    i: np.ndarray
    j: np.ndarray
    azimuth: np.ndarray
    phi: np.ndarray
    timestamp: np.ndarray

    def __len__(self) -> int:
        return self.depth.size

    @property
    def hit(self) -> np.ndarray:
        return self.instance != 0


def locate_beams(beams: BeamTable, tick: TickFrames):
    """Map each beam to (capture index, pixel column, pixel row).

    Capture ownership follows the plan's equal azimuth shares; the 1-degree
    frustum pad makes boundary beams valid in either neighbour, so float
    rounding at a shared boundary cannot push a beam out of frame.
    """
    n_cap = len(tick.plan.captures)
    if n_cap == 0 or len(beams) == 0:
        z = np.zeros(len(beams), dtype=np.int64)
        return z, z.copy(), z.copy()
    share = tick.plan.covered_azimuth / n_cap
    rel = beams.azimuth - tick.sweep_start
    idx = np.clip(np.floor(rel / share).astype(np.int64), 0, n_cap - 1)
    px = np.zeros(len(beams), dtype=np.int64)
    py = np.zeros(len(beams), dtype=np.int64)
    for k, fb in enumerate(tick.frames):
        sel = idx == k
        if not np.any(sel):
            continue
        theta_rel = beams.azimuth[sel] - fb.yaw
        n_x, n_y = beam_to_pixel(theta_rel, beams.phi[sel], fb.intrinsics)
        px[sel] = nearest_pixel(n_x)
        py[sel] = nearest_pixel(n_y)
    return idx, px, py


def sample_buffers(beams: BeamTable, tick: TickFrames) -> RawReturns:
    """Nearest-pixel read of each beam's capture; misses propagate."""
    n = len(beams)
    depth = np.full(n, np.inf, dtype=np.float64)
    incidence = np.zeros(n, dtype=np.float64)
    material = np.zeros(n, dtype=np.uint8)
    instance = np.zeros(n, dtype=np.uint32)

    if len(tick.plan.captures) and n:
        idx, px, py = locate_beams(beams, tick)
        for k, fb in enumerate(tick.frames):
            sel = idx == k
            if not np.any(sel):
                continue
            depth[sel] = fb.depth[py[sel], px[sel]]
            incidence[sel] = fb.incidence[py[sel], px[sel]]
            material[sel] = fb.material[py[sel], px[sel]]
            instance[sel] = fb.instance[py[sel], px[sel]]

    return RawReturns(
        depth=depth,
        incidence=incidence,
        material=material,
        instance=instance,
        i=beams.i.copy(),
        j=beams.j.copy(),
        azimuth=beams.azimuth.copy(),
        phi=beams.phi.copy(),
        timestamp=beams.timestamp.copy(),
    )
