"""Physically-based spinning multi-beam LiDAR simulator.

Pipeline: plan captures for each tick's azimuth sweep, rasterize square
depth/incidence/material/instance buffers with a ray-cast renderer, project
every beam to its pixel, then apply Lambertian intensity, range noise, and
the sensor's detectability cutoff to produce labeled point clouds.
"""

from pathlib import Path

from .errors import (
    ConfigError,
    FrustumError,
    SceneError,
    SimulationError,
    SpectralError,
)
from .geometry import Pose, spherical_to_direction
from .scene import Scene, SceneObject, build_bvh, load_scene
from .spectral import (
    SpectralLibrary,
    Spectrum,
    flat_spectrum,
    load_library,
    parse_spectrum_file,
    reflectance_at,
    write_library,
)
from .render import (
    CameraIntrinsics,
    CapturePlan,
    FrameBuffers,
    decode_depth_24,
    decode_incidence_angle_rgba,
    encode_depth_24,
    encode_incidence_angle_rgba,
    make_intrinsics,
    plan_captures,
    quantize_buffers,
    rasterize,
)
from .sampler import (
    BeamTable,
    RawReturns,
    SensorProfile,
    TickFrames,
    beam_table,
    beam_to_pixel,
    nearest_pixel,
    os0_128,
    render_tick,
    sample_buffers,
)
from .physics import (
    FinalizeResult,
    FrameCounts,
    LidarPoint,
    PointCloud,
    apply_noise,
    capability_threshold,
    finalize,
    lambertian_intensity,
    make_rng,
)
from .oracle import (
    OracleHit,
    ParityReport,
    cast_beam,
    cast_beams,
    compare_paths,
)
from .config import RunConfig, RunFlags, load_run_config
from .cloudio import read_cloud, write_cloud
from .pipeline import RunSummary, run

__version__ = "0.1.0"


def asset_path(*parts: str) -> Path:
    """Path to a bundled asset, e.g. asset_path('scenes', 'closed_room.json')."""
    return Path(__file__).parent / "assets" / Path(*parts)

__all__ = [
    "asset_path",
    "ConfigError", "FrustumError", "SceneError", "SimulationError", "SpectralError",
    "Pose", "spherical_to_direction",
    "Scene", "SceneObject", "build_bvh", "load_scene",
    "SpectralLibrary", "Spectrum", "flat_spectrum", "load_library",
    "parse_spectrum_file", "reflectance_at", "write_library",
    "CameraIntrinsics", "CapturePlan", "FrameBuffers",
    "decode_depth_24", "decode_incidence_angle_rgba",
    "encode_depth_24", "encode_incidence_angle_rgba",
    "make_intrinsics", "plan_captures", "quantize_buffers", "rasterize",
    "BeamTable", "RawReturns", "SensorProfile", "TickFrames",
    "beam_table", "beam_to_pixel", "nearest_pixel", "os0_128",
    "render_tick", "sample_buffers",
    "FinalizeResult", "FrameCounts", "LidarPoint", "PointCloud",
    "apply_noise", "capability_threshold", "finalize",
    "lambertian_intensity", "make_rng",
    "OracleHit", "ParityReport", "cast_beam", "cast_beams", "compare_paths",
    "RunConfig", "RunFlags", "load_run_config",
    "read_cloud", "write_cloud",
    "RunSummary", "run",
]
