"""Rigid poses, triangle helpers, and procedural mesh builders.

Coordinate conventions used throughout the package:

* world and sensor frames are right handed, +X forward, +Y left, +Z up;
* azimuth is measured about +Z from +X towards +Y;
* elevation is measured from the XY plane towards +Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def rotation_from_euler_deg(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation matrix for extrinsic x-y-z Euler angles in degrees (Rz @ Ry @ Rx)."""
    rx, ry, rz = (math.radians(a) for a in (roll, pitch, yaw))
    cx, sx = math.cos(rx), math.sin(rx)
    cy, sy = math.cos(ry), math.sin(ry)
    cz, sz = math.cos(rz), math.sin(rz)
    Rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]], dtype=float)
    Ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]], dtype=float)
    Rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]], dtype=float)
    return Rz @ Ry @ Rx


def rotation_about_z(angle: float) -> np.ndarray:
    """Rotation matrix about +Z by `angle` radians."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Pose:
    """Rigid transform: world point = rotation @ local point + translation."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_euler_deg(cls, position=(0.0, 0.0, 0.0), rotation_deg=(0.0, 0.0, 0.0)) -> "Pose":
        return cls(rotation_from_euler_deg(*rotation_deg), np.asarray(position, dtype=float))

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        """Transform an (N, 3) array of points into the parent frame."""
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def apply_vectors(self, vectors: np.ndarray) -> np.ndarray:
        """Rotate an (N, 3) array of direction vectors (no translation)."""
        return np.asarray(vectors, dtype=float) @ self.rotation.T


def spherical_to_direction(azimuth, elevation) -> np.ndarray:
    """Unit direction(s) for azimuth/elevation; accepts scalars or arrays."""
    azimuth = np.asarray(azimuth, dtype=float)
    elevation = np.asarray(elevation, dtype=float)
    ce = np.cos(elevation)
    return np.stack([ce * np.cos(azimuth), ce * np.sin(azimuth), np.sin(elevation)], axis=-1)


def triangle_normals_and_areas(vertices: np.ndarray, faces: np.ndarray | None = None):
    """Per-face unit normals and areas from winding.

    Accepts (vertices (V, 3), faces (F, 3)) or packed triangles (T, 3, 3)
    when faces is omitted. Returns (normals (F, 3), areas (F,)); degenerate
    faces get a zero normal and zero area so callers can drop them.
    """
    if faces is None:
        tris = np.asarray(vertices, dtype=np.float64)
        v0, e1, e2 = tris[:, 0], tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]
    else:
        v0 = vertices[faces[:, 0]]
        e1 = vertices[faces[:, 1]] - v0
        e2 = vertices[faces[:, 2]] - v0
    cross = np.cross(e1, e2)
    norms = np.linalg.norm(cross, axis=1)
    areas = 0.5 * norms
    normals = np.zeros_like(cross)
    ok = norms > 0.0
    normals[ok] = cross[ok] / norms[ok, None]
    return normals, areas


# ---------------------------------------------------------------------------
# Procedural meshes (vertices (V, 3) float, faces (F, 3) int)
# ---------------------------------------------------------------------------

def box_mesh(size=(1.0, 1.0, 1.0)):
    """Axis-aligned box centred at the origin; 8 vertices, 12 triangles."""
    hx, hy, hz = (0.5 * float(s) for s in size)
    vertices = np.array(
        [
            [-hx, -hy, -hz], [hx, -hy, -hz], [hx, hy, -hz], [-hx, hy, -hz],
            [-hx, -hy, hz], [hx, -hy, hz], [hx, hy, hz], [-hx, hy, hz],
        ]
    )
    faces = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # bottom
            [4, 5, 6], [4, 6, 7],  # top
            [0, 1, 5], [0, 5, 4],  # -y
            [2, 3, 7], [2, 7, 6],  # +y
            [1, 2, 6], [1, 6, 5],  # +x
            [3, 0, 4], [3, 4, 7],  # -x
        ],
        dtype=np.int64,
    )
    return vertices, faces


def quad_mesh(width=1.0, height=1.0):
    """Rectangle in the local Y-Z plane (normal along X), centred at the origin."""
    hy, hz = 0.5 * float(width), 0.5 * float(height)
    vertices = np.array([[0.0, -hy, -hz], [0.0, hy, -hz], [0.0, hy, hz], [0.0, -hy, hz]])
    faces = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    return vertices, faces


def uv_sphere_mesh(radius=1.0, rings=16, sectors=32):
    """Latitude/longitude sphere with exact pole vertices on the X axis.

    Poles sit at (-radius, 0, 0) and (+radius, 0, 0) so an axial ray from
    outside hits a vertex exactly.
    """
    if rings < 2 or sectors < 3:
        raise ValueError("uv_sphere_mesh needs rings >= 2 and sectors >= 3")
    r = float(radius)
    verts = [(-r, 0.0, 0.0)]
    for i in range(1, rings):
        polar = math.pi * i / rings
        x = -r * math.cos(polar)
        ring_r = r * math.sin(polar)
        for j in range(sectors):
            az = 2.0 * math.pi * j / sectors
            verts.append((x, ring_r * math.cos(az), ring_r * math.sin(az)))
    verts.append((r, 0.0, 0.0))
    vertices = np.array(verts)

    faces = []
    def ring_start(i):  # first vertex index of latitude ring i (1-based)
        return 1 + (i - 1) * sectors

    for j in range(sectors):
        faces.append([0, ring_start(1) + j, ring_start(1) + (j + 1) % sectors])
    for i in range(1, rings - 1):
        a, b = ring_start(i), ring_start(i + 1)
        for j in range(sectors):
            j2 = (j + 1) % sectors
            faces.append([a + j, b + j, b + j2])
            faces.append([a + j, b + j2, a + j2])
    last = len(vertices) - 1
    a = ring_start(rings - 1)
    for j in range(sectors):
        faces.append([last, a + (j + 1) % sectors, a + j])
    return vertices, np.array(faces, dtype=np.int64)
