"""Run configuration: one JSON file describes a complete simulation.

Angles in the file are degrees (keys carry a _deg suffix); the loaded
structures use radians throughout. All paths are resolved relative to the
config file so a run directory is a self-contained artifact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .geometry import Pose
from .sampler import SensorProfile

OUTPUT_FORMATS = ("ply", "pcd", "csv")

# JSON key -> SensorProfile field, with unit conversion where needed
_PROFILE_KEYS = {
    "channels": "channels",
    "samples_per_rev": "samples_per_rev",
    "fov_h_deg": "fov_h",
    "fov_v_deg": "fov_v",
    "elevation_deg": "elevation_table",
    "spin_rate_hz": "spin_rate",
    "wavelength_nm": "wavelength_nm",
    "image_width": "W",
    "d_max_m": "d_max",
    "r_l_max": "r_l_max",
    "noise_sigma_m": "noise_sigma",
    "noise_range_coeff": "noise_range_coeff",
    "seed": "seed",
}

_FLAG_KEYS = (
    "use_24bit_depth_path",
    "zero_noise",
    "emit_parity_report",
    "debug_buffers",
    "per_tick_files",
)


@dataclass(frozen=True)
class RunFlags:
    use_24bit_depth_path: bool = False
    zero_noise: bool = False
    emit_parity_report: bool = False
    debug_buffers: bool = False
    per_tick_files: bool = False


@dataclass(frozen=True)
class RunConfig:
    scene_path: Path
    library_path: Path
    mapping_path: Path | None
    default_reflectance: float
    profile: SensorProfile
    trajectory: tuple[tuple[float, Pose], ...]
    duration: float
    dt: float
    output_format: str
    output_path: Path
    flags: RunFlags
    max_capture_fov: float

    def pose_at(self, t: float) -> Pose:
        """Piecewise-constant trajectory: latest waypoint at or before t."""
        pose = Pose.identity()
        for when, p in self.trajectory:
            if when <= t:
                pose = p
            else:
                break
        return pose


def _parse_profile(doc: dict) -> SensorProfile:
    kwargs = {}
    for key, value in doc.items():
        if key not in _PROFILE_KEYS:
            raise ConfigError(f"profile: unknown field {key!r}")
        name = _PROFILE_KEYS[key]
        if key.endswith("_deg"):
            if name == "elevation_table":
                value = np.radians(np.asarray(value, dtype=np.float64))
            else:
                value = math.radians(float(value))
        kwargs[name] = value
    try:
        return SensorProfile(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"profile: {exc}") from exc


def _parse_trajectory(entries) -> tuple[tuple[float, Pose], ...]:
    if entries is None:
        return ((0.0, Pose.identity()),)
    if not isinstance(entries, list) or not entries:
        raise ConfigError("trajectory: must be a non-empty list of waypoints")
    out = []
    last_t = -math.inf
    for k, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError(f"trajectory[{k}]: must be an object")
        try:
            t = float(entry.get("time", 0.0))
            pose = Pose.from_euler_deg(
                position=entry.get("position", (0.0, 0.0, 0.0)),
                rotation_deg=entry.get("rotation_deg", (0.0, 0.0, 0.0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"trajectory[{k}]: {exc}") from exc
        if t <= last_t:
            raise ConfigError(f"trajectory[{k}]: times must be strictly increasing")
        last_t = t
        out.append((t, pose))
    return tuple(out)


def load_run_config(path: str | Path, seed: int | None = None,
                    output_dir: str | Path | None = None) -> RunConfig:
    """Parse and validate a run config file; optional CLI overrides."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path.name}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path.name}: top level must be an object")
    base = path.parent

    known = {
        "scene", "spectral_library", "spectral_mapping", "default_reflectance",
        "profile", "trajectory", "duration", "dt", "output", "flags",
        "max_capture_fov_deg",
    }
    for key in doc:
        if key not in known:
            raise ConfigError(f"unknown field {key!r}")

    if "scene" not in doc:
        raise ConfigError("scene: required")
    scene_path = base / doc["scene"]
    if "spectral_library" not in doc:
        raise ConfigError("spectral_library: required")
    library_path = base / doc["spectral_library"]
    mapping_path = base / doc["spectral_mapping"] if "spectral_mapping" in doc else None

    default_reflectance = float(doc.get("default_reflectance", 0.5))
    if not (0.0 <= default_reflectance <= 1.0):
        raise ConfigError("default_reflectance: must be in [0, 1]")

    profile_doc = doc.get("profile", {})
    if not isinstance(profile_doc, dict):
        raise ConfigError("profile: must be an object")
    profile = _parse_profile(profile_doc)
    if seed is not None:
        profile = replace(profile, seed=int(seed))

    duration = doc.get("duration")
    if not isinstance(duration, (int, float)) or duration <= 0:
        raise ConfigError("duration: must be a positive number of seconds")
    dt = doc.get("dt")
    if not isinstance(dt, (int, float)) or dt <= 0:
        raise ConfigError("dt: must be a positive number of seconds")

    output = doc.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("output: must be an object")
    fmt = output.get("format", "ply")
    if fmt not in OUTPUT_FORMATS:
        raise ConfigError(f"output.format: {fmt!r} not one of {OUTPUT_FORMATS}")
    out_path = Path(output_dir) if output_dir is not None else base / output.get("path", "out")

    flags_doc = doc.get("flags", {})
    if not isinstance(flags_doc, dict):
        raise ConfigError("flags: must be an object")
    for key in flags_doc:
        if key not in _FLAG_KEYS:
            raise ConfigError(f"flags: unknown flag {key!r}")
        if not isinstance(flags_doc[key], bool):
            raise ConfigError(f"flags.{key}: must be true or false")
    flags = RunFlags(**flags_doc)
    if flags.zero_noise:
        profile = replace(profile, noise_sigma=0.0, noise_range_coeff=0.0)
    if flags.emit_parity_report and (
        profile.noise_sigma != 0.0 or profile.noise_range_coeff != 0.0
    ):
        raise ConfigError(
            "flags.emit_parity_report: requires zero noise "
            "(set flags.zero_noise or zero the profile noise fields)"
        )

    max_fov = math.radians(float(doc.get("max_capture_fov_deg", 100.0)))
    if not (profile.fov_v < max_fov <= math.pi * 0.9):
        raise ConfigError(
            "max_capture_fov_deg: must exceed the vertical FOV and stay below 162"
        )

    return RunConfig(
        scene_path=scene_path,
        library_path=library_path,
        mapping_path=mapping_path,
        default_reflectance=default_reflectance,
        profile=profile,
        trajectory=_parse_trajectory(doc.get("trajectory")),
        duration=float(duration),
        dt=float(dt),
        output_format=fmt,
        output_path=out_path,
        flags=flags,
        max_capture_fov=max_fov,
    )
