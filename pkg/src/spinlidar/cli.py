"""Command-line entry points: simulate, parity, inspect-scene."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import load_run_config
from .errors import SimulationError
from .oracle import compare_paths
from .pipeline import run
from .scene import load_scene
from .spectral import load_library


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinlidar",
        description="Spinning multi-beam LiDAR simulator over triangle scenes.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", type=Path, help="run config JSON file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the profile seed")
        p.add_argument("--output-dir", type=Path, default=None,
                       help="override the configured output directory")
        return p

    add("simulate", "run the full pipeline and write point clouds")
    add("parity", "compare the raster path against analytic beam casts")
    add("inspect-scene", "load the scene and print its contents")
    return parser


def _cmd_simulate(args) -> int:
    config = load_run_config(args.config, seed=args.seed, output_dir=args.output_dir)
    summary = run(config)
    print(summary.to_text())
    return 0


def _cmd_parity(args) -> int:
    config = load_run_config(args.config, seed=args.seed, output_dir=args.output_dir)
    if config.profile.noise_sigma != 0.0 or config.profile.noise_range_coeff != 0.0:
        print("parity: forcing zero noise for the comparison", file=sys.stderr)
        from dataclasses import replace
        config = replace(
            config,
            profile=replace(config.profile, noise_sigma=0.0, noise_range_coeff=0.0),
        )
    scene = load_scene(config.scene_path)
    lib = load_library(config.library_path, config.mapping_path,
                       config.default_reflectance)
    report = compare_paths(scene, config.profile, config.pose_at(0.0), lib,
                           max_capture_fov=config.max_capture_fov)
    config.output_path.mkdir(parents=True, exist_ok=True)
    report.write_csv(config.output_path / "parity.csv")
    (config.output_path / "parity.txt").write_text(report.to_text(), encoding="utf-8")
    print(report.to_text())
    print(f"wrote {config.output_path / 'parity.csv'}")
    return 0


def _cmd_inspect_scene(args) -> int:
    config = load_run_config(args.config, seed=args.seed, output_dir=args.output_dir)
    scene = load_scene(config.scene_path)
    print(f"{len(scene.objects)} object(s), {scene.triangle_count} triangle(s)")
    lo = scene.triangles.min(axis=(0, 1))
    hi = scene.triangles.max(axis=(0, 1))
    print(f"bounds [{lo[0]:.3f}, {lo[1]:.3f}, {lo[2]:.3f}] .. "
          f"[{hi[0]:.3f}, {hi[1]:.3f}, {hi[2]:.3f}] m")
    print(f"{'id':>6} {'name':<24} {'class':<12} {'mat':>4} {'tris':>7}  position")
    for obj in scene.objects:
        n_tris = int(np.sum(scene.tri_object == scene.objects.index(obj)))
        t = obj.transform.translation
        print(f"{obj.instance_id:>6} {obj.name:<24} {obj.class_label:<12} "
              f"{obj.material_index:>4} {n_tris:>7}  "
              f"({t[0]:.2f}, {t[1]:.2f}, {t[2]:.2f})")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "parity": _cmd_parity,
    "inspect-scene": _cmd_inspect_scene,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
