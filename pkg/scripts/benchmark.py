#!/usr/bin/env python3
"""Wall-time benchmark: full sensor revolutions through the whole pipeline.

Builds a procedural ~10k-triangle scene, renders one revolution per repeat,
and reports a per-stage breakdown (capture planning, rasterization, buffer
sampling, return physics). The first revolution is run untimed so numba
compilation never pollutes the numbers. Single-process; rasterization uses
numba's parallel loops, so core count matters for the render stage.

    python3 scripts/benchmark.py --width 1024 --repeat 3
"""

import argparse
import math
import os
import platform
import time

import numpy as np

import spinlidar as sl
from spinlidar.geometry import Pose, box_mesh, uv_sphere_mesh
from spinlidar.sampler import TWO_PI


def clutter_scene(n_boxes: int, n_spheres: int) -> sl.Scene:
    """Boxes and spheres ringing the origin at 12-28 m."""
    objects = []
    iid = 1
    for k in range(n_spheres):
        ang = TWO_PI * k / n_spheres
        r = 12.0 + 6.0 * (k % 3)
        v, f = uv_sphere_mesh(1.5, rings=16, sectors=17)
        objects.append(sl.SceneObject(
            name=f"sphere{k}", class_label="prop", instance_id=iid,
            material_index=1 + (k % 9), vertices=v, faces=f,
            transform=Pose.from_euler_deg((r * math.cos(ang), r * math.sin(ang), 0.0)),
        ))
        iid += 1
    for k in range(n_boxes):
        ang = TWO_PI * k / n_boxes
        r = 20.0 + 2.0 * ((k * 7) % 5)
        v, f = box_mesh((1.0, 1.0, 3.0))
        objects.append(sl.SceneObject(
            name=f"box{k}", class_label="prop", instance_id=iid,
            material_index=1 + (k % 9), vertices=v, faces=f,
            transform=Pose.from_euler_deg(
                (r * math.cos(ang), r * math.sin(ang), 0.0), (0.0, 0.0, float(k))),
        ))
        iid += 1
    return sl.build_bvh(sl.Scene(objects))


def one_revolution(scene, lib, profile, width, tick_index=0):
    """Run the four pipeline stages once; return (stage timings, counts)."""
    pose = Pose.identity()
    t = {}

    t0 = time.perf_counter()
    plan = sl.plan_captures(profile.spin_rate, 1.0 / profile.spin_rate,
                            profile.fov_v, math.radians(100.0), W=width)
    t["plan"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    tick = sl.render_tick(scene, pose, plan, 0.0)
    t["render"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    beams = sl.beam_table(profile, 0.0, TWO_PI, 0.0, 1.0 / profile.spin_rate)
    raw = sl.sample_buffers(beams, tick)
    t["sample"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    result = sl.finalize(raw, lib, profile, sl.make_rng(profile.seed, tick_index))
    t["physics"] = time.perf_counter() - t0

    pixel_rays = len(plan.captures) * width * width
    return t, len(beams), pixel_rays, result.counts


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--width", type=int, default=1024, help="capture buffer width")
    ap.add_argument("--channels", type=int, default=128)
    ap.add_argument("--samples", type=int, default=1024, help="columns per revolution")
    ap.add_argument("--boxes", type=int, default=110)
    ap.add_argument("--spheres", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    profile = sl.os0_128(channels=args.channels, samples_per_rev=args.samples,
                         W=args.width)
    lib = sl.SpectralLibrary({}, sl.flat_spectrum("default", 0.5))

    t0 = time.perf_counter()
    scene = clutter_scene(args.boxes, args.spheres)
    build_s = time.perf_counter() - t0
    tris = scene.triangles.shape[0]

    print(f"machine: {platform.machine()}, {os.cpu_count()} cpu(s), "
          f"python {platform.python_version()}, numpy {np.__version__}")
    print(f"scene: {len(scene.objects)} objects, {tris} triangles "
          f"(BVH built in {build_s:.2f} s)")
    print(f"sensor: {profile.channels} channels x {args.samples} columns, "
          f"W={args.width}")

    one_revolution(scene, lib, profile, args.width)  # warm-up: compile kernels

    runs = [one_revolution(scene, lib, profile, args.width, k)
            for k in range(args.repeat)]
    stages = ("plan", "render", "sample", "physics")
    best = {s: min(r[0][s] for r in runs) for s in stages}
    total = [sum(r[0].values()) for r in runs]
    beams, pixel_rays, counts = runs[0][1], runs[0][2], runs[0][3]

    print(f"\nbest of {args.repeat} (seconds):")
    for s in stages:
        print(f"  {s:<8} {best[s]:8.4f}")
    print(f"  {'total':<8} {min(total):8.4f}   (mean {np.mean(total):.4f})")
    print(f"\nthroughput: {pixel_rays / best['render'] / 1e6:.2f} M pixel rays/s, "
          f"{beams / min(total) / 1e3:.1f} k beams/s end to end")
    print(f"returns: {counts.kept} kept / {counts.dropped} dropped / "
          f"{counts.missed} missed of {counts.total}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
