import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import spinlidar as sl
from spinlidar.geometry import Pose
from spinlidar.sampler import (
    TWO_PI,
    _first_column_at_or_after,
    column_azimuth,
    locate_beams,
    revolution_of,
)

from conftest import make_plane_scene


# -- profile ------------------------------------------------------------------

def test_default_profile_is_os0_128(os0):
    assert os0.channels == 128
    assert os0.samples_per_rev == 1024
    assert os0.fov_v == math.pi / 2.0
    assert os0.spin_rate == 10.0
    assert os0.wavelength_nm == 850.0
    assert os0.W == 1024
    assert os0.d_max == 50.0
    assert os0.r_l_max == 0.8
    assert os0.revolution_period == 0.1
    assert os0.azimuth_step == pytest.approx(TWO_PI / 1024, abs=0.0)


def test_elevations_ascend_and_span_the_vertical_fov(os0):
    phi = os0.elevations()
    assert phi.shape == (128,)
    assert phi[0] == -math.pi / 4.0
    assert phi[-1] == math.pi / 4.0
    assert np.all(np.diff(phi) > 0)


def test_single_channel_elevation_is_zero():
    p = sl.SensorProfile(channels=1)
    assert p.elevations().tolist() == [0.0]


def test_custom_elevation_table_used_verbatim():
    table = np.array([-0.5, -0.1, 0.2, 0.7])
    p = sl.SensorProfile(channels=4, fov_v=1.5, elevation_table=table)
    assert np.array_equal(p.elevations(), table)


@pytest.mark.parametrize("kw", [
    {"channels": 0},
    {"samples_per_rev": 0},
    {"fov_h": 0.0},
    {"fov_h": TWO_PI + 0.1},
    {"fov_v": 0.0},
    {"spin_rate": 0.0},
    {"d_max": -1.0},
    {"r_l_max": 0.0},
    {"r_l_max": 1.1},
    {"noise_sigma": -0.01},
])
def test_profile_validation(kw):
    with pytest.raises(ValueError):
        sl.SensorProfile(**kw)


def test_elevation_table_length_must_match_channels():
    with pytest.raises(ValueError, match="elevation_table length"):
        sl.SensorProfile(channels=4, elevation_table=np.zeros(3))


def test_elevation_table_must_fit_vertical_fov():
    with pytest.raises(ValueError, match="outside"):
        sl.SensorProfile(channels=2, fov_v=0.5, elevation_table=np.array([-0.4, 0.4]))


# -- column bookkeeping -------------------------------------------------------

def test_column_azimuth_unwraps_across_revolutions(os0):
    step = os0.azimuth_step
    assert column_azimuth(os0, 0) == 0.0
    assert column_azimuth(os0, 1) == step
    assert column_azimuth(os0, 1024) == TWO_PI
    assert column_azimuth(os0, 1024 + 3) == TWO_PI + 3 * step


def test_revolution_of_column_azimuths(os0):
    for rev in (0, 1, 2, 7):
        g = np.array([rev * 1024, rev * 1024 + 511, rev * 1024 + 1023])
        assert np.all(revolution_of(column_azimuth(os0, g)) == rev)


def test_first_column_at_or_after_exact_and_between(os0):
    step = os0.azimuth_step
    assert _first_column_at_or_after(os0, 0.0) == 0
    assert _first_column_at_or_after(os0, 5 * step) == 5
    assert _first_column_at_or_after(os0, 5.5 * step) == 6
    assert _first_column_at_or_after(os0, TWO_PI) == 1024


# -- beam table ---------------------------------------------------------------

def test_full_revolution_beam_count(os0):
    beams = sl.beam_table(os0, 0.0, TWO_PI, 0.0, 0.1)
    assert len(beams) == 131_072
    assert beams.column_count == 1024


def test_quarter_sweep_beam_count(os0):
    beams = sl.beam_table(os0, 0.0, math.pi / 2.0, 0.0, 0.025)
    assert beams.column_count == 256
    assert len(beams) == 256 * 128


def test_four_sample_azimuths():
    p = sl.SensorProfile(channels=1, samples_per_rev=4)
    beams = sl.beam_table(p, 0.0, TWO_PI, 0.0, 0.1)
    assert np.allclose(np.degrees(beams.azimuth), [0.0, 90.0, 180.0, 270.0])


def test_channel_varies_fastest(os0):
    beams = sl.beam_table(os0, 0.0, math.pi / 2.0, 0.0, 0.025)
    assert np.array_equal(beams.j[:128], np.arange(128))
    assert np.all(beams.azimuth[:128] == beams.azimuth[0])
    assert np.all(np.diff(beams.phi[:128]) > 0)  # ascending elevation in a column
    assert np.all(np.diff(beams.azimuth) >= 0.0)


def test_timestamps_linear_in_azimuth(os0):
    t0, dt = 0.3, 0.025
    start = TWO_PI * 10.0 * t0  # azimuth the sensor reaches at t0
    beams = sl.beam_table(os0, start, start + math.pi / 2.0, t0, dt)
    want = t0 + (beams.azimuth - start) / (TWO_PI * 10.0)
    assert np.allclose(beams.timestamp, want, atol=0.0)
    assert beams.timestamp[0] >= t0
    assert beams.timestamp[-1] < t0 + dt
    by_col = beams.timestamp.reshape(-1, 128)
    assert np.all(by_col == by_col[:, :1])  # all channels of a column share t


def test_beam_table_rejects_bad_interval(os0):
    with pytest.raises(ValueError, match="sweep_end"):
        sl.beam_table(os0, 1.0, 1.0, 0.0, 0.1)
    with pytest.raises(ValueError, match="dt"):
        sl.beam_table(os0, 0.0, 1.0, 0.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(
    spin=st.floats(1.0, 40.0),
    dt=st.floats(0.003, 0.08),
    n_ticks=st.integers(2, 9),
)
def test_ticks_partition_columns_exactly(spin, dt, n_ticks):
    p = sl.SensorProfile(channels=2, samples_per_rev=512, spin_rate=spin)
    seen = []
    for k in range(n_ticks):
        start = TWO_PI * spin * (k * dt)
        end = TWO_PI * spin * ((k + 1) * dt)
        beams = sl.beam_table(p, start, end, k * dt, dt)
        g = revolution_of(beams.azimuth) * 512 + beams.i
        seen.append(g[::2])  # one entry per column
    allg = np.concatenate(seen)
    assert np.array_equal(allg, np.arange(allg[0], allg[0] + allg.size))


# -- projection ---------------------------------------------------------------

def test_beam_to_pixel_center():
    intr = sl.make_intrinsics(1024, math.radians(90.0))
    assert sl.beam_to_pixel(0.0, 0.0, intr) == (512.0, 512.0)


def test_beam_to_pixel_30_degrees():
    intr = sl.make_intrinsics(1024, math.radians(90.0))
    n_x, n_y = sl.beam_to_pixel(math.radians(30.0), 0.0, intr)
    assert n_x == pytest.approx(807.6033378250884, rel=1e-12)
    assert n_y == 512.0


def test_beam_to_pixel_odd_symmetry():
    intr = sl.make_intrinsics(512, math.radians(100.0))
    for th, ph in [(0.3, 0.2), (0.1, -0.4), (0.7, 0.0)]:
        x1, y1 = sl.beam_to_pixel(th, ph, intr)
        x2, y2 = sl.beam_to_pixel(-th, ph, intr)
        assert x1 - intr.c_u == pytest.approx(-(x2 - intr.c_u), abs=1e-12)
        assert y1 == y2
        x3, y3 = sl.beam_to_pixel(th, -ph, intr)
        assert x3 == x1
        assert y3 - intr.c_v == pytest.approx(-(y1 - intr.c_v), abs=1e-12)


def test_beam_to_pixel_monotone_in_azimuth():
    intr = sl.make_intrinsics(512, math.radians(100.0))
    theta = np.linspace(-0.8, 0.8, 201)
    n_x, n_y = sl.beam_to_pixel(theta, np.zeros_like(theta), intr)
    assert np.all(np.diff(n_x) > 0)
    assert np.all(n_y == intr.c_v)


def test_beam_to_pixel_rejects_outside_half_fov():
    intr = sl.make_intrinsics(512, math.radians(90.0))
    with pytest.raises(sl.FrustumError, match="outside capture half-FOV"):
        sl.beam_to_pixel(math.radians(45.1), 0.0, intr)


def test_beam_to_pixel_rejects_offscreen_elevation():
    intr = sl.make_intrinsics(512, math.radians(90.0))
    with pytest.raises(sl.FrustumError, match="outside the 512px frame"):
        sl.beam_to_pixel(0.0, math.radians(46.0), intr)


def test_nearest_pixel_rounding():
    n = np.array([-0.5, -0.2, 0.0, 0.49, 0.5, 1.49, 1.5, 100.2])
    assert sl.nearest_pixel(n).tolist() == [0, 0, 0, 0, 1, 1, 2, 100]


# -- sampling -----------------------------------------------------------------

def test_sampled_beam_reads_its_own_pixel():
    # one column pointing at 45 deg, a wall dead ahead of that column
    d = 10.0
    scene = _plane_at_azimuth(45.0, d)
    p = sl.SensorProfile(channels=1, samples_per_rev=8, W=256)
    plan = sl.plan_captures(p.spin_rate, 0.025, p.fov_v, math.radians(100.0), W=256)
    tick = sl.render_tick(scene, Pose.identity(), plan, 0.0)
    beams = sl.beam_table(p, 0.0, math.pi / 2.0, 0.0, 0.025)
    raw = sl.sample_buffers(beams, tick)
    k = int(np.flatnonzero(np.isclose(np.degrees(beams.azimuth), 45.0))[0])
    assert raw.instance[k] == 1
    assert raw.material[k] == 5
    assert raw.depth[k] == pytest.approx(d, abs=1e-9)
    assert raw.incidence[k] == pytest.approx(0.0, abs=1e-6)


def _plane_at_azimuth(az_deg: float, distance: float):
    from spinlidar.geometry import quad_mesh
    v, f = quad_mesh(20.0, 20.0)
    a = math.radians(az_deg)
    obj = sl.SceneObject(
        name="wall", class_label="wall", instance_id=1, material_index=5,
        vertices=v, faces=f,
        transform=Pose.from_euler_deg(
            (distance * math.cos(a), distance * math.sin(a), 0.0),
            (0.0, 0.0, 180.0 + az_deg)),
    )
    return sl.build_bvh(sl.Scene([obj]))


def test_sky_beams_read_as_misses():
    scene = make_plane_scene(distance=10.0, size=2.0)  # small target
    p = sl.SensorProfile(channels=16, samples_per_rev=64, W=256)
    plan = sl.plan_captures(p.spin_rate, 0.025, p.fov_v, math.radians(100.0), W=256)
    tick = sl.render_tick(scene, Pose.identity(), plan, 0.0)
    beams = sl.beam_table(p, 0.0, math.pi / 2.0, 0.0, 0.025)
    raw = sl.sample_buffers(beams, tick)
    miss = ~raw.hit
    assert miss.any() and raw.hit.any()
    assert np.all(np.isinf(raw.depth[miss]))
    assert np.all(raw.instance[miss] == 0)
    assert np.all(raw.material[miss] == 0)


def test_every_beam_of_a_full_revolution_lands_in_frame(room_scene, os0):
    # the whole point of the padded per-capture FOV: no beam ever falls out
    plan = sl.plan_captures(os0.spin_rate, 0.1, os0.fov_v, math.radians(100.0), W=256)
    tick = sl.render_tick(room_scene, Pose.identity(), plan, 0.0)
    beams = sl.beam_table(os0, 0.0, TWO_PI, 0.0, 0.1)
    idx, px, py = locate_beams(beams, tick)  # no FrustumError
    assert px.min() >= 0 and px.max() <= 255
    assert py.min() >= 0 and py.max() <= 255
    assert np.all((idx >= 0) & (idx < 4))
    # ownership matches the plan's azimuth shares
    for k, cap in enumerate(plan.captures):
        sel = idx == k
        rel = beams.azimuth[sel]
        assert rel.min() >= cap.lo - 1e-12
        assert rel.max() < cap.hi + 1e-12


def test_sampling_is_deterministic(room_scene, small_profile):
    plan = sl.plan_captures(small_profile.spin_rate, 0.025,
                            small_profile.fov_v, math.radians(100.0), W=256)
    tick = sl.render_tick(room_scene, Pose.identity(), plan, 0.0)
    beams = sl.beam_table(small_profile, 0.0, math.pi / 2.0, 0.0, 0.025)
    a = sl.sample_buffers(beams, tick)
    b = sl.sample_buffers(beams, tick)
    assert np.array_equal(a.depth, b.depth)
    assert np.array_equal(a.instance, b.instance)
    assert np.array_equal(a.timestamp, b.timestamp)
