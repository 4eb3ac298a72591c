import math

import numpy as np
import pytest

import spinlidar as sl
from spinlidar.geometry import Pose, box_mesh, quad_mesh, uv_sphere_mesh


def make_board_scene() -> sl.Scene:
    """Nine 2x2 m boards around the sensor: distances 5/10/15 m, tilts 0/20/40 deg."""
    return sl.load_scene(sl.asset_path("scenes", "material_boards.json"))


def make_room_scene() -> sl.Scene:
    return sl.load_scene(sl.asset_path("scenes", "closed_room.json"))


def make_cluttered_scene(n_boxes: int = 110, n_spheres: int = 16) -> sl.Scene:
    """Procedural ~10k-triangle scene ringing the origin (benchmark fixture)."""
    objects = []
    iid = 1
    for k in range(n_spheres):
        ang = 2.0 * math.pi * k / n_spheres
        r = 12.0 + 6.0 * (k % 3)
        v, f = uv_sphere_mesh(1.5, rings=16, sectors=17)
        objects.append(sl.SceneObject(
            name=f"sphere{k}", class_label="prop", instance_id=iid,
            material_index=1 + (k % 9), vertices=v, faces=f,
            transform=Pose.from_euler_deg(
                (r * math.cos(ang), r * math.sin(ang), 0.0), (0, 0, 0)),
        ))
        iid += 1
    for k in range(n_boxes):
        ang = 2.0 * math.pi * k / n_boxes
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


def make_plane_scene(distance: float = 10.0, yaw_deg: float = 180.0,
                     size: float = 40.0, material: int = 5) -> sl.Scene:
    """One large quad facing the sensor at +x."""
    v, f = quad_mesh(size, size)
    obj = sl.SceneObject(
        name="plane", class_label="wall", instance_id=1, material_index=material,
        vertices=v, faces=f,
        transform=Pose.from_euler_deg((distance, 0.0, 0.0), (0.0, 0.0, yaw_deg)),
    )
    return sl.build_bvh(sl.Scene([obj]))


@pytest.fixture(scope="session")
def board_scene() -> sl.Scene:
    return make_board_scene()


@pytest.fixture(scope="session")
def room_scene() -> sl.Scene:
    return make_room_scene()


@pytest.fixture(scope="session")
def library() -> sl.SpectralLibrary:
    return sl.load_library(sl.asset_path("spectra"))


@pytest.fixture(scope="session")
def flat_library() -> sl.SpectralLibrary:
    """Every index resolves to a flat 0.5 spectrum (the default material)."""
    return sl.SpectralLibrary({}, sl.flat_spectrum("default", 0.5))


@pytest.fixture(scope="session")
def os0() -> sl.SensorProfile:
    return sl.os0_128()


@pytest.fixture(scope="session")
def small_profile() -> sl.SensorProfile:
    """Cheap profile for pipeline tests: 32 channels, 256 columns, W=256."""
    return sl.SensorProfile(channels=32, samples_per_rev=256, W=256)


@pytest.fixture(scope="session", autouse=True)
def _warm_jit():
    """Compile the traversal kernel once before any timed test runs."""
    scene = make_plane_scene()
    sl.cast_beam(scene, Pose.identity(), 0.0, 0.0)


# test_acceptance appends one "name: PASS/FAIL (detail)" line per criterion;
# the hook replays them after the run so they survive pytest's capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def rays_hitting_scene(scene: sl.Scene, n: int, seed: int = 0):
    """Random rays aimed at random triangle interior points, plus misses."""
    rng = np.random.default_rng(seed)
    tris = scene.triangles
    pick = rng.integers(0, tris.shape[0], size=n)
    w = rng.dirichlet((1.0, 1.0, 1.0), size=n)
    targets = np.einsum("nk,nkj->nj", w, tris[pick])
    origins = rng.uniform(-2.0, 2.0, size=(n, 3))
    dirs = targets - origins
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return origins, dirs
