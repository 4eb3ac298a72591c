"""Virtual render camera: capture planning, rasterization, byte encodings.

Each tick of the spinning sensor is covered by one or more square pinhole
captures. A capture rasterizes depth (Euclidean sensor-to-hit range),
incidence angle, material byte, and 24-bit instance id at W x W pixels by
casting one ray per pixel center against the scene BVH.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import FrustumError
from .geometry import Pose, rotation_about_z
from .scene import Scene

TWO_POW_24 = 2**24
CODE_MAX = float(2**24 - 1)
HALF_PI = math.pi / 2.0

# extra angular clearance added around each capture's beam coverage so that
# beams exactly on a capture boundary still project strictly inside the frame
FOV_PAD = math.radians(1.0)
# horizontal sweep a capture may own = max_capture_fov minus both pads
USABLE_MARGIN = 2.0 * FOV_PAD

MISS_DEPTH = np.inf


@dataclass(frozen=True)
class CameraIntrinsics:
    """Square ideal pinhole: f_x = f_y = W / (2 tan(FOV_c / 2)), centered."""

    W: int
    fov_c: float
    f_x: float
    f_y: float
    c_u: float
    c_v: float


def make_intrinsics(W: int, fov_c: float) -> CameraIntrinsics:
    if W < 64 or W % 2 != 0:
        raise ValueError(f"W must be even and >= 64, got {W}")
    if not (0.0 < fov_c < math.pi):
        raise ValueError(f"FOV_c must be in (0, pi), got {fov_c}")
    f = W / (2.0 * math.tan(fov_c / 2.0))
    return CameraIntrinsics(W=W, fov_c=fov_c, f_x=f, f_y=f, c_u=W / 2.0, c_v=W / 2.0)


@dataclass(frozen=True)
class Capture:
    """One pinhole view of the tick's sweep.

    Angles are azimuth offsets from the sweep start: the capture owns beam
    azimuths in [lo, hi) and its optical axis sits at yaw = (lo + hi) / 2.
    """

    yaw: float
    lo: float
    hi: float
    intrinsics: CameraIntrinsics


@dataclass(frozen=True)
class CapturePlan:
    captures: tuple[Capture, ...]
    covered_azimuth: float


def capture_fov(share: float, sensor_fov_v: float, pad: float = FOV_PAD) -> float:
    """Smallest square FOV whose frustum contains every beam of one capture.

    A beam at horizontal offset t (|t| <= share/2) and elevation p
    (|p| <= fov_v/2) projects to |n_x - c_u| = f*tan(t) and
    |n_y - c_v| = f*tan(p)/cos(t); both must stay below W/2 = f*tan(FOV_c/2).
    The corner beam (t = share/2, p = fov_v/2) maximizes the second ratio, so
    the vertical requirement dominates for tall sensors.
    """
    t = share / 2.0 + pad
    p = sensor_fov_v / 2.0 + pad
    if t >= HALF_PI or p >= HALF_PI:
        raise FrustumError("capture share or vertical FOV too wide for a pinhole")
    corner = math.atan(math.tan(p) / math.cos(t))
    half = max(t, corner)
    fov = 2.0 * half
    if fov >= math.pi:
        raise FrustumError("required capture FOV reaches 180 degrees")
    return fov


def plan_captures(spin_rate: float, dt: float, sensor_fov_v: float,
                  max_capture_fov: float, W: int = 1024) -> CapturePlan:
    """Split the tick's azimuth sweep into equal contiguous captures.

    sweep = 2*pi*spin_rate*dt, capped at one full turn per tick. The split
    count is ceil(sweep / (max_capture_fov - margin)); each capture's FOV_c
    is then widened just enough (capture_fov) that every beam in its share,
    at any elevation within the sensor's vertical FOV, projects in-frame.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if spin_rate <= 0.0:
        raise ValueError(f"spin_rate must be positive, got {spin_rate}")
    if not (sensor_fov_v < max_capture_fov <= math.pi * 0.9):
        raise ValueError(
            f"need sensor_fov_v < max_capture_fov <= 0.9*pi, "
            f"got {sensor_fov_v} and {max_capture_fov}"
        )
    sweep = 2.0 * math.pi * spin_rate * dt
    if sweep > 2.0 * math.pi:
        sweep = 2.0 * math.pi
    usable = max_capture_fov - USABLE_MARGIN
    n = max(1, math.ceil(sweep / usable - 1e-12))
    share = sweep / n
    fov_c = capture_fov(share, sensor_fov_v)
    intr = make_intrinsics(W, fov_c)
    captures = tuple(
        Capture(yaw=(k + 0.5) * share, lo=k * share, hi=(k + 1) * share, intrinsics=intr)
        for k in range(n)
    )
    return CapturePlan(captures=captures, covered_azimuth=sweep)


@dataclass
class FrameBuffers:
    """One capture's raster targets. Pixel (row, col) = (n_y, n_x) integer grid.

    depth is Euclidean sensor-to-hit distance (inf where instance == 0);
    incidence is in [0, pi/2] (0 where instance == 0).
    """

    intrinsics: CameraIntrinsics
    yaw: float                 # absolute azimuth of the optical axis, sensor frame
    depth: np.ndarray          # (W, W) float64
    incidence: np.ndarray      # (W, W) float64
    material: np.ndarray       # (W, W) uint8
    instance: np.ndarray       # (W, W) uint32


def pixel_ray_directions(intr: CameraIntrinsics) -> np.ndarray:
    """(W, W, 3) unit ray directions in the capture frame (+x optical axis).

    Row index is n_y (down = negative elevation), column index is n_x
    (right = increasing azimuth); the grid samples integer pixel coordinates.
    """
    W = intr.W
    cols = np.arange(W, dtype=np.float64)
    rows = np.arange(W, dtype=np.float64)
    u = (cols - intr.c_u) / intr.f_x          # tan(theta)
    v = (intr.c_v - rows) / intr.f_y          # tan(phi)/cos(theta)
    dirs = np.empty((W, W, 3), dtype=np.float64)
    dirs[:, :, 0] = 1.0
    dirs[:, :, 1] = u[None, :]
    dirs[:, :, 2] = v[:, None]
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    return dirs


def rasterize(scene: Scene, yaw: float, pose: Pose, intr: CameraIntrinsics) -> FrameBuffers:
    """Cast one ray per pixel center; nearest hit fills all four buffers."""
    if scene.bvh is None:
        raise ValueError("scene BVH not built")
    W = intr.W
    dirs_cam = pixel_ray_directions(intr).reshape(-1, 3)
    rot = pose.rotation @ rotation_about_z(yaw)
    dirs_world = dirs_cam @ rot.T
    origin = pose.translation

    t, tri = scene.bvh.trace(origin, dirs_world)
    hit = tri >= 0
    depth = np.full(W * W, MISS_DEPTH, dtype=np.float64)
    incidence = np.zeros(W * W, dtype=np.float64)
    material = np.zeros(W * W, dtype=np.uint8)
    instance = np.zeros(W * W, dtype=np.uint32)

    if hit.any():
        ht = tri[hit]
        depth[hit] = t[hit]
        normals = scene.normals[ht]
        cosi = np.abs(np.einsum("ij,ij->i", normals, dirs_world[hit]))
        incidence[hit] = np.arccos(np.clip(cosi, 0.0, 1.0))
        material[hit] = scene.tri_material[ht]
        instance[hit] = scene.tri_instance[ht]

    return FrameBuffers(
        intrinsics=intr,
        yaw=yaw,
        depth=depth.reshape(W, W),
        incidence=incidence.reshape(W, W),
        material=material.reshape(W, W),
        instance=instance.reshape(W, W),
    )


# ---------------------------------------------------------------------------
# 24-bit byte encodings

def encode_depth_24(depth, d_max: float):
    """Linear quantization of [0, d_max] onto 24 bits, split over 3 bytes.

    Returns (hi, mid, lo) uint8 arrays (or a 3-tuple of ints for scalars).
    """
    d = np.asarray(depth, dtype=np.float64)
    if np.any(d < 0.0) or np.any(d > d_max):
        raise ValueError(f"depth outside [0, {d_max}]")
    code = np.rint(d / d_max * CODE_MAX).astype(np.uint32)
    hi = ((code >> 16) & 0xFF).astype(np.uint8)
    mid = ((code >> 8) & 0xFF).astype(np.uint8)
    lo = (code & 0xFF).astype(np.uint8)
    if np.isscalar(depth):
        return (int(hi), int(mid), int(lo))
    return hi, mid, lo


def decode_depth_24(code_bytes, d_max: float):
    hi, mid, lo = code_bytes
    code = (
        np.asarray(hi, dtype=np.uint32) << 16
        | np.asarray(mid, dtype=np.uint32) << 8
        | np.asarray(lo, dtype=np.uint32)
    )
    out = code.astype(np.float64) / CODE_MAX * d_max
    return float(out) if out.ndim == 0 else out


def encode_incidence_angle_rgba(angle, material_index):
    """Angle over [0, pi/2] on 3 bytes; material byte in the alpha channel."""
    a = np.asarray(angle, dtype=np.float64)
    if np.any(a < 0.0) or np.any(a > HALF_PI):
        raise ValueError("incidence angle outside [0, pi/2]")
    code = np.rint(a / HALF_PI * CODE_MAX).astype(np.uint32)
    hi = ((code >> 16) & 0xFF).astype(np.uint8)
    mid = ((code >> 8) & 0xFF).astype(np.uint8)
    lo = (code & 0xFF).astype(np.uint8)
    alpha = np.asarray(material_index, dtype=np.uint8)
    if np.isscalar(angle):
        return (int(hi), int(mid), int(lo), int(alpha))
    return hi, mid, lo, alpha


def decode_incidence_angle_rgba(rgba):
    hi, mid, lo, alpha = rgba
    code = (
        np.asarray(hi, dtype=np.uint32) << 16
        | np.asarray(mid, dtype=np.uint32) << 8
        | np.asarray(lo, dtype=np.uint32)
    )
    angle = code.astype(np.float64) / CODE_MAX * HALF_PI
    if angle.ndim == 0:
        return float(angle), int(np.asarray(alpha))
    return angle, np.asarray(alpha, dtype=np.uint8)


def quantize_buffers(frames: FrameBuffers, d_max: float) -> FrameBuffers:
    """Round-trip depth and incidence through their 24-bit encodings.

    Models the byte-packed texture readback path. Hit pixels beyond d_max are
    outside the encodable depth range; they keep full-precision depth (the
    range cutoff drops them downstream either way). Misses stay misses.
    """
    depth = frames.depth.copy()
    encodable = np.isfinite(depth) & (depth <= d_max)
    depth[encodable] = decode_depth_24(encode_depth_24(depth[encodable], d_max), d_max)
    inci = decode_incidence_angle_rgba(
        encode_incidence_angle_rgba(frames.incidence, frames.material)
    )[0]
    return replace(frames, depth=depth, incidence=inci)


# ---------------------------------------------------------------------------
# debug buffer dumps

def _write_pgm16(path: Path, values: np.ndarray) -> None:
    data = values.astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{values.shape[1]} {values.shape[0]}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())


def write_debug_buffers(frames: FrameBuffers, directory: str | Path,
                        prefix: str, d_max: float) -> list[Path]:
    """Dump the four buffers as portable image files.

    depth/incidence: 16-bit PGM normalized to d_max and pi/2 (misses -> 0);
    material: 8-bit PGM; instance: PPM with the 24-bit id over RGB.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []

    d = np.where(np.isfinite(frames.depth), np.clip(frames.depth / d_max, 0.0, 1.0), 0.0)
    path = directory / f"{prefix}_depth.pgm"
    _write_pgm16(path, np.rint(d * 65535.0))
    out.append(path)

    path = directory / f"{prefix}_incidence.pgm"
    _write_pgm16(path, np.rint(frames.incidence / HALF_PI * 65535.0))
    out.append(path)

    path = directory / f"{prefix}_material.pgm"
    with open(path, "wb") as fh:
        fh.write(f"P5\n{frames.material.shape[1]} {frames.material.shape[0]}\n255\n".encode("ascii"))
        fh.write(frames.material.astype(np.uint8).tobytes())
    out.append(path)

    inst = frames.instance.astype(np.uint32)
    rgb = np.stack(
        [(inst >> 16) & 0xFF, (inst >> 8) & 0xFF, inst & 0xFF], axis=-1
    ).astype(np.uint8)
    path = directory / f"{prefix}_instance.ppm"
    with open(path, "wb") as fh:
        fh.write(f"P6\n{inst.shape[1]} {inst.shape[0]}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
    out.append(path)
    return out
