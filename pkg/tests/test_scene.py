import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import spinlidar as sl
from spinlidar.geometry import Pose, box_mesh, quad_mesh, triangle_normals_and_areas
from spinlidar.scene import MAX_INSTANCE_ID, load_obj


def _quad_object(name="q", iid=1, mat=0, **pose_kw):
    v, f = quad_mesh(2.0, 2.0)
    return sl.SceneObject(name=name, class_label="wall", instance_id=iid,
                          material_index=mat, vertices=v, faces=f,
                          transform=Pose.from_euler_deg(**pose_kw) if pose_kw else Pose.identity())


# -- bundled configs --------------------------------------------------------

def test_cube_config():
    scene = sl.load_scene(sl.asset_path("scenes", "cube.json"))
    assert scene.triangle_count == 12
    obj = scene.objects[0]
    assert obj.instance_id == 7
    assert obj.material_index == 3
    assert scene.semantic_lookup(7) == ("cube", "prop")


def test_board_scene_identity(board_scene):
    assert len(board_scene.objects) == 9
    assert sorted(o.instance_id for o in board_scene.objects) == list(range(1, 10))
    assert sorted(o.material_index for o in board_scene.objects) == list(range(1, 10))
    assert board_scene.triangle_count == 18  # quads split in two


def test_room_scene_is_closed(room_scene):
    # every triangle belongs to a known object and ids match the table
    assert set(np.unique(room_scene.tri_instance)) == set(room_scene.instance_table)
    assert room_scene.triangle_count >= 26


# -- semantic lookup --------------------------------------------------------

def test_semantic_lookup_zero_is_reserved(board_scene):
    assert board_scene.semantic_lookup(0) == ("", "")


def test_semantic_lookup_unknown_id_raises(board_scene):
    with pytest.raises(sl.SceneError, match="unknown instance_id 4242"):
        board_scene.semantic_lookup(4242)


def test_duplicate_instance_id_rejected():
    with pytest.raises(sl.SceneError, match="duplicate instance_id 3"):
        sl.Scene([_quad_object("a", iid=3), _quad_object("b", iid=3)])


# -- object validation ------------------------------------------------------

@pytest.mark.parametrize("iid", [0, -1, MAX_INSTANCE_ID + 1])
def test_instance_id_range(iid):
    with pytest.raises(sl.SceneError, match="instance_id"):
        _quad_object(iid=iid)


def test_max_instance_id_is_24_bit():
    assert MAX_INSTANCE_ID == 2**24 - 1
    _quad_object(iid=MAX_INSTANCE_ID)  # boundary is valid


@pytest.mark.parametrize("mat", [-1, 256])
def test_material_index_range(mat):
    with pytest.raises(sl.SceneError, match="material_index"):
        _quad_object(mat=mat)


def test_face_index_out_of_range():
    v, _ = quad_mesh(1.0, 1.0)
    with pytest.raises(sl.SceneError, match="face index out of range"):
        sl.SceneObject(name="bad", class_label="", instance_id=1, material_index=0,
                       vertices=v, faces=np.array([[0, 1, 99]]))


# -- build ------------------------------------------------------------------

def test_degenerate_triangles_dropped_with_warning(caplog):
    v = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    faces = np.array([[0, 1, 2], [0, 1, 1]])  # second has zero area
    obj = sl.SceneObject(name="thin", class_label="", instance_id=1,
                         material_index=0, vertices=v, faces=faces)
    with caplog.at_level(logging.WARNING, logger="spinlidar.scene"):
        scene = sl.build_bvh(sl.Scene([obj]))
    assert scene.triangle_count == 1
    assert "dropped 1 degenerate triangle" in caplog.text


def test_all_degenerate_scene_rejected():
    v = np.array([[0.0, 0, 0], [1, 0, 0]])
    obj = sl.SceneObject(name="flat", class_label="", instance_id=1,
                         material_index=0, vertices=v, faces=np.array([[0, 1, 1]]))
    with pytest.raises(sl.SceneError, match="no non-degenerate triangles"):
        sl.build_bvh(sl.Scene([obj]))


def test_per_triangle_labels_follow_objects(board_scene):
    for slot, obj in enumerate(board_scene.objects):
        mask = board_scene.tri_object == slot
        assert mask.sum() == 2
        assert np.all(board_scene.tri_instance[mask] == obj.instance_id)
        assert np.all(board_scene.tri_material[mask] == obj.material_index)


def test_normals_unit_length(room_scene):
    assert np.allclose(np.linalg.norm(room_scene.normals, axis=1), 1.0, atol=1e-12)


# -- rigid transforms -------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(
    pos=st.tuples(*[st.floats(-50, 50) for _ in range(3)]),
    rot=st.tuples(*[st.floats(-180, 180) for _ in range(3)]),
)
def test_rigid_transform_preserves_area(pos, rot):
    v, f = box_mesh((1.0, 2.0, 3.0))
    obj = sl.SceneObject(name="b", class_label="", instance_id=1, material_index=0,
                         vertices=v, faces=f,
                         transform=Pose.from_euler_deg(pos, rot))
    _, a0 = triangle_normals_and_areas(v, f)
    _, a1 = triangle_normals_and_areas(obj.world_triangles())
    assert np.allclose(a1, a0, rtol=1e-9)


# -- OBJ reader -------------------------------------------------------------

def test_load_obj_fan_and_slashes(tmp_path):
    p = tmp_path / "m.obj"
    p.write_text(
        "# comment\n"
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
        "vn 0 0 1\n"
        "f 1/1/1 2/2/1 3/3/1 4/4/1\n"   # quad with vt/vn tokens -> two triangles
    )
    v, f = load_obj(p)
    assert v.shape == (4, 3)
    assert f.tolist() == [[0, 1, 2], [0, 2, 3]]


def test_load_obj_negative_indices(tmp_path):
    p = tmp_path / "m.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n")
    _, f = load_obj(p)
    assert f.tolist() == [[0, 1, 2]]


def test_load_obj_bad_face_index(tmp_path):
    p = tmp_path / "m.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")
    with pytest.raises(sl.SceneError, match="face index out of range"):
        load_obj(p)


def test_load_scene_wavefront(tmp_path):
    scene = sl.load_scene(sl.asset_path("meshes", "cube.obj"), format="wavefront-mesh")
    assert scene.triangle_count == 12
    assert scene.objects[0].instance_id == 1


# -- config loader ----------------------------------------------------------

def test_load_scene_missing_file(tmp_path):
    with pytest.raises(sl.SceneError, match="not found"):
        sl.load_scene(tmp_path / "nope.json")


def test_load_scene_unknown_format():
    with pytest.raises(sl.SceneError, match="unknown scene format"):
        sl.load_scene(sl.asset_path("scenes", "cube.json"), format="usd")


def test_load_scene_auto_ids_skip_taken(tmp_path):
    doc = {"objects": [
        {"name": "a", "primitive": {"type": "quad"}},
        {"name": "b", "primitive": {"type": "quad"}, "instance_id": 1},
        {"name": "c", "primitive": {"type": "quad"}},
    ]}
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    scene = sl.load_scene(p)
    by_name = {o.name: o.instance_id for o in scene.objects}
    assert by_name == {"a": 2, "b": 1, "c": 3}


def test_load_scene_mesh_and_primitive_conflict(tmp_path):
    doc = {"objects": [{"name": "x", "mesh": "m.obj", "primitive": {"type": "box"}}]}
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(sl.SceneError, match="either 'mesh' or 'primitive'"):
        sl.load_scene(p)


def test_load_scene_invalid_json(tmp_path):
    p = tmp_path / "s.json"
    p.write_text("{nope")
    with pytest.raises(sl.SceneError, match="invalid JSON"):
        sl.load_scene(p)


def test_primitive_sphere_roundness(tmp_path):
    doc = {"objects": [{"name": "s", "instance_id": 1,
                        "primitive": {"type": "sphere", "radius": 2.0,
                                      "rings": 24, "sectors": 32}}]}
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    scene = sl.load_scene(p)
    r = np.linalg.norm(scene.triangles.reshape(-1, 3), axis=1)
    assert np.allclose(r, 2.0, atol=1e-12)
