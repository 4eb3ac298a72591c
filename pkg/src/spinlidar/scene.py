"""Scene assembly: objects with semantics, world-space triangles, BVH.

A scene is immutable once built; the renderer and the beam caster both read
the same triangle/BVH arrays concurrently.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bvh import Bvh
from .errors import SceneError
from .geometry import (
    Pose,
    box_mesh,
    quad_mesh,
    triangle_normals_and_areas,
    uv_sphere_mesh,
)

log = logging.getLogger(__name__)

MAX_INSTANCE_ID = 2**24 - 1


@dataclass
class SceneObject:
    """One rigid object: a triangle mesh plus identity and placement."""

    name: str
    class_label: str
    instance_id: int          # 1 .. 2^24-1; 0 means "no hit" in buffers
    material_index: int       # 0 .. 255; 0 means "unassigned" (default material)
    vertices: np.ndarray      # (V, 3) float64, meters, object frame
    faces: np.ndarray         # (F, 3) int64 vertex indices
    transform: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if not (1 <= self.instance_id <= MAX_INSTANCE_ID):
            raise SceneError(
                f"object {self.name!r}: instance_id {self.instance_id} outside [1, {MAX_INSTANCE_ID}]"
            )
        if not (0 <= self.material_index <= 255):
            raise SceneError(
                f"object {self.name!r}: material_index {self.material_index} outside [0, 255]"
            )
        if self.faces.size and self.faces.max() >= len(self.vertices):
            raise SceneError(f"object {self.name!r}: face index out of range")

    def world_triangles(self) -> np.ndarray:
        """(F, 3, 3) triangle vertices in the world frame."""
        world = self.transform.apply_points(self.vertices)
        return world[self.faces]


class Scene:
    """Immutable world: objects, per-triangle semantics, and a BVH.

    After build():
      triangles    (T, 3, 3) world-space vertices
      normals      (T, 3) unit face normals (from winding)
      tri_instance (T,) uint32, tri_material (T,) uint8
      tri_object   (T,) index into .objects
      bvh          Bvh over .triangles
    """

    def __init__(self, objects: list[SceneObject]):
        seen: dict[int, str] = {}
        for obj in objects:
            if obj.instance_id in seen:
                raise SceneError(
                    f"duplicate instance_id {obj.instance_id} "
                    f"({seen[obj.instance_id]!r} and {obj.name!r})"
                )
            seen[obj.instance_id] = obj.name
        self.objects = list(objects)
        self.instance_table: dict[int, tuple[str, str]] = {
            obj.instance_id: (obj.name, obj.class_label) for obj in objects
        }
        self.triangles: np.ndarray | None = None
        self.normals: np.ndarray | None = None
        self.tri_instance: np.ndarray | None = None
        self.tri_material: np.ndarray | None = None
        self.tri_object: np.ndarray | None = None
        self.bvh: Bvh | None = None

    def semantic_lookup(self, instance_id: int) -> tuple[str, str]:
        if instance_id == 0:
            return ("", "")
        try:
            return self.instance_table[instance_id]
        except KeyError:
            raise SceneError(f"unknown instance_id {instance_id}") from None

    @property
    def triangle_count(self) -> int:
        return 0 if self.triangles is None else self.triangles.shape[0]


def build_bvh(scene: Scene) -> Scene:
    """Flatten all objects to world triangles, drop degenerates, build the BVH."""
    tris, norms, inst, mat, objslot = [], [], [], [], []
    for slot, obj in enumerate(scene.objects):
        t = obj.world_triangles()
        if t.shape[0] == 0:
            continue
        n, a = triangle_normals_and_areas(t)
        keep = a > 0.0
        dropped = int((~keep).sum())
        if dropped:
            log.warning("object %r: dropped %d degenerate triangle(s)", obj.name, dropped)
            t, n = t[keep], n[keep]
        if t.shape[0] == 0:
            continue
        tris.append(t)
        norms.append(n)
        inst.append(np.full(t.shape[0], obj.instance_id, dtype=np.uint32))
        mat.append(np.full(t.shape[0], obj.material_index, dtype=np.uint8))
        objslot.append(np.full(t.shape[0], slot, dtype=np.int32))
    if not tris:
        raise SceneError("scene has no non-degenerate triangles")
    scene.triangles = np.ascontiguousarray(np.concatenate(tris))
    scene.normals = np.ascontiguousarray(np.concatenate(norms))
    scene.tri_instance = np.concatenate(inst)
    scene.tri_material = np.concatenate(mat)
    scene.tri_object = np.concatenate(objslot)
    scene.bvh = Bvh(scene.triangles)
    return scene


# ---------------------------------------------------------------------------
# loading

_PRIMITIVES = {"box", "quad", "sphere"}


def load_obj(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Minimal Wavefront OBJ reader: v and f records, fan triangulation.

    Texture/normal indices (f v/vt/vn) are accepted and ignored; normals are
    recomputed from winding downstream.
    """
    path = Path(path)
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise SceneError(f"{path.name}:{lineno}: vertex needs 3 coordinates")
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif tag == "f":
                if len(parts) < 4:
                    raise SceneError(f"{path.name}:{lineno}: face needs >=3 vertices")
                idx = []
                for token in parts[1:]:
                    i = int(token.split("/")[0])
                    # OBJ is 1-based; negative counts back from the end
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
            # vn/vt/usemtl/o/g/s/mtllib: ignored
    if not verts or not faces:
        raise SceneError(f"{path.name}: no triangles found")
    v = np.asarray(verts, dtype=np.float64)
    f = np.asarray(faces, dtype=np.int64)
    if f.min() < 0 or f.max() >= len(v):
        raise SceneError(f"{path.name}: face index out of range")
    return v, f


def _primitive_mesh(spec: dict, where: str) -> tuple[np.ndarray, np.ndarray]:
    kind = spec.get("type")
    if kind not in _PRIMITIVES:
        raise SceneError(f"{where}: unknown primitive type {kind!r}")
    if kind == "box":
        size = spec.get("size", [1.0, 1.0, 1.0])
        if np.isscalar(size):
            size = [size, size, size]
        return box_mesh(np.asarray(size, dtype=np.float64))
    if kind == "quad":
        return quad_mesh(float(spec.get("width", 1.0)), float(spec.get("height", 1.0)))
    return uv_sphere_mesh(
        float(spec.get("radius", 1.0)),
        rings=int(spec.get("rings", 16)),
        sectors=int(spec.get("sectors", 32)),
    )


def _object_from_config(entry: dict, base_dir: Path, auto_id: int) -> SceneObject:
    name = entry.get("name", f"object_{auto_id}")
    where = f"object {name!r}"
    if "primitive" in entry and "mesh" in entry:
        raise SceneError(f"{where}: give either 'mesh' or 'primitive', not both")
    if "primitive" in entry:
        vertices, faces = _primitive_mesh(entry["primitive"], where)
    elif "mesh" in entry:
        vertices, faces = load_obj(base_dir / entry["mesh"])
    else:
        raise SceneError(f"{where}: needs a 'mesh' file or a 'primitive'")
    mat = entry.get("material_index", 0)
    if not isinstance(mat, int) or isinstance(mat, bool):
        raise SceneError(f"{where}: material_index must be an integer")
    if mat > 255:
        raise SceneError(f"{where}: material_index {mat} > 255")
    pose = Pose.from_euler_deg(
        position=entry.get("position", (0.0, 0.0, 0.0)),
        rotation_deg=entry.get("rotation_deg", (0.0, 0.0, 0.0)),
    )
    return SceneObject(
        name=name,
        class_label=entry.get("class_label", ""),
        instance_id=entry.get("instance_id", auto_id),
        material_index=mat,
        vertices=vertices,
        faces=faces,
        transform=pose,
    )


def load_scene(path: str | Path, format: str = "native-config") -> Scene:
    """Load a scene and build its BVH.

    format 'native-config': JSON file with an "objects" list; each entry names
    a mesh file (relative to the config) or an inline primitive, plus
    position / rotation_deg / instance_id / material_index / class_label.
    Missing instance_ids are auto-assigned 1, 2, ... in file order (skipping
    explicitly taken ids).

    format 'wavefront-mesh': a bare OBJ becomes a single object with
    instance_id 1 and the default material.
    """
    path = Path(path)
    if not path.exists():
        raise SceneError(f"scene file not found: {path}")
    if format == "wavefront-mesh":
        vertices, faces = load_obj(path)
        obj = SceneObject(
            name=path.stem, class_label="", instance_id=1, material_index=0,
            vertices=vertices, faces=faces,
        )
        return build_bvh(Scene([obj]))
    if format != "native-config":
        raise SceneError(f"unknown scene format {format!r}")

    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path.name}: invalid JSON ({exc})") from exc
    entries = doc.get("objects")
    if not isinstance(entries, list) or not entries:
        raise SceneError(f"{path.name}: top-level 'objects' list is required")

    taken = {
        e["instance_id"] for e in entries
        if isinstance(e, dict) and isinstance(e.get("instance_id"), int)
    }
    objects = []
    next_id = 1
    for entry in entries:
        if not isinstance(entry, dict):
            raise SceneError(f"{path.name}: each object must be a JSON object")
        if "instance_id" not in entry:
            while next_id in taken:
                next_id += 1
            taken.add(next_id)
            entry = {**entry, "instance_id": next_id}
        objects.append(_object_from_config(entry, path.parent, entry["instance_id"]))
    return build_bvh(Scene(objects))
