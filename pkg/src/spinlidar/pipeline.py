"""End-to-end simulation: ticks -> captures -> beams -> points -> files.

Tick k covers sensor times [k*dt, (k+1)*dt) and the azimuth interval
[2*pi*spin*k*dt, 2*pi*spin*(k+1)*dt); every tick evaluates these boundary
expressions identically, so columns partition across ticks with no gaps or
duplicates. Points are grouped into one output file per revolution (or per
tick by flag).
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .oracle import compare_paths
from .physics import (
    DROPPED_CAPABILITY,
    DROPPED_RANGE,
    KEPT,
    MISSED,
    FrameCounts,
    PointCloud,
    finalize,
    make_rng,
)
from .render import plan_captures, quantize_buffers, write_debug_buffers
from .sampler import TWO_PI, beam_table, render_tick, revolution_of, sample_buffers
from .scene import Scene, load_scene
from .spectral import SpectralLibrary, load_library
from .cloudio import write_cloud

log = logging.getLogger(__name__)


@dataclass
class RunSummary:
    frames: list[tuple[str, int, FrameCounts]] = field(default_factory=list)
    counts: FrameCounts = field(default_factory=FrameCounts)
    files: list[Path] = field(default_factory=list)
    ticks: int = 0
    beam_total: int = 0
    wall_time_s: float = 0.0

    def to_text(self, include_wall_time: bool = True) -> str:
        lines = [
            f"ticks {self.ticks}  beams {self.beam_total}",
            f"kept {self.counts.kept}  dropped {self.counts.dropped} "
            f"(range {self.counts.dropped_range}, capability {self.counts.dropped_capability})  "
            f"missed {self.counts.missed}",
        ]
        for name, n_points, counts in self.frames:
            lines.append(
                f"  {name}: {n_points} points "
                f"(kept {counts.kept}, dropped {counts.dropped}, missed {counts.missed})"
            )
        lines.extend(f"  wrote {p}" for p in self.files)
        if include_wall_time:
            lines.append(f"wall time {self.wall_time_s:.2f} s")
        return "\n".join(lines)


def simulate_tick(scene: Scene, lib: SpectralLibrary, config: RunConfig,
                  tick_index: int, t0: float, t1: float):
    """One tick: returns (FinalizeResult, BeamTable)."""
    profile = config.profile
    dt = t1 - t0
    sweep_start = TWO_PI * profile.spin_rate * t0
    sweep_end = TWO_PI * profile.spin_rate * t1
    if sweep_end - sweep_start > TWO_PI:
        # a tick longer than the revolution period truncates to one turn
        sweep_end = sweep_start + TWO_PI

    plan = plan_captures(
        profile.spin_rate, dt, profile.fov_v, config.max_capture_fov, profile.W
    )
    pose = config.pose_at(t0)
    beams = beam_table(profile, sweep_start, sweep_end, t0, dt)

    tick = render_tick(scene, pose, plan, sweep_start)
    if config.flags.use_24bit_depth_path:
        tick.frames = [quantize_buffers(fb, profile.d_max) for fb in tick.frames]
    if config.flags.debug_buffers:
        for c, fb in enumerate(tick.frames):
            write_debug_buffers(
                fb, config.output_path / "debug", f"tick{tick_index:04d}_cap{c}",
                profile.d_max,
            )

    raw = sample_buffers(beams, tick)
    rng = make_rng(profile.seed, tick_index)
    result = finalize(raw, lib, profile, rng)
    return result, beams


def run(config: RunConfig) -> RunSummary:
    """Execute a full simulation run and write its output files."""
    started = time.perf_counter()
    scene = load_scene(config.scene_path)
    lib = load_library(
        config.library_path, config.mapping_path, config.default_reflectance
    )
    config.output_path.mkdir(parents=True, exist_ok=True)

    profile = config.profile
    n_ticks = max(1, math.ceil(config.duration / config.dt - 1e-12))
    summary = RunSummary(ticks=n_ticks)

    clouds: list[PointCloud] = []
    revs: list[np.ndarray] = []
    tick_frames: list[tuple[str, PointCloud, FrameCounts]] = []
    per_rev_counts: dict[int, FrameCounts] = {}

    for k in range(n_ticks):
        t0 = k * config.dt
        t1 = min((k + 1) * config.dt, config.duration)
        result, beams = simulate_tick(scene, lib, config, k, t0, t1)
        summary.counts.add(result.counts)
        summary.beam_total += len(beams)
        clouds.append(result.points)
        rev_beam = revolution_of(beams.azimuth)
        revs.append(rev_beam[result.reason == KEPT])
        if config.flags.per_tick_files:
            tick_frames.append((f"tick{k:04d}", result.points, result.counts))
        for r in np.unique(rev_beam):
            m = rev_beam == r
            per_rev_counts.setdefault(int(r), FrameCounts()).add(FrameCounts(
                kept=int((result.reason[m] == KEPT).sum()),
                dropped_range=int((result.reason[m] == DROPPED_RANGE).sum()),
                dropped_capability=int((result.reason[m] == DROPPED_CAPABILITY).sum()),
                missed=int((result.reason[m] == MISSED).sum()),
            ))

    ext = config.output_format
    if config.flags.per_tick_files:
        for name, points, counts in tick_frames:
            path = config.output_path / f"cloud_{name}.{ext}"
            write_cloud(points, ext, path)
            summary.files.append(path)
            summary.frames.append((name, len(points), counts))
    else:
        all_points = PointCloud.concatenate(clouds)
        all_revs = (
            np.concatenate(revs) if revs else np.empty(0, dtype=np.int64)
        )
        rev_ids = np.unique(all_revs) if len(all_points) else np.array([0], dtype=np.int64)
        if rev_ids.size == 0:
            rev_ids = np.array([0], dtype=np.int64)
        for r in rev_ids:
            frame = all_points.select(all_revs == r)
            path = config.output_path / f"cloud_rev{int(r):04d}.{ext}"
            write_cloud(frame, ext, path)
            summary.files.append(path)
            summary.frames.append(
                (f"rev{int(r):04d}", len(frame), per_rev_counts.get(int(r), FrameCounts()))
            )

    if config.flags.emit_parity_report:
        report = compare_paths(
            scene, profile, config.pose_at(0.0), lib,
            max_capture_fov=config.max_capture_fov,
        )
        csv_path = config.output_path / "parity.csv"
        report.write_csv(csv_path)
        txt_path = config.output_path / "parity.txt"
        txt_path.write_text(report.to_text(), encoding="utf-8")
        summary.files.extend([csv_path, txt_path])

    summary.wall_time_s = time.perf_counter() - started
    summary_path = config.output_path / "summary.json"
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump({
            "ticks": summary.ticks,
            "beams": summary.beam_total,
            "kept": summary.counts.kept,
            "dropped_range": summary.counts.dropped_range,
            "dropped_capability": summary.counts.dropped_capability,
            "missed": summary.counts.missed,
            "frames": [
                {"name": name, "points": n, "kept": c.kept,
                 "dropped": c.dropped, "missed": c.missed}
                for name, n, c in summary.frames
            ],
            "files": [p.name for p in summary.files],
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    summary.files.append(summary_path)
    return summary
