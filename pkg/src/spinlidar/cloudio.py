"""Point-cloud serialization: ASCII PLY, PCD, and CSV.

Every format carries the same eight fields per point:
x y z intensity ring instance_id material_index timestamp.
Decimal formatting is fixed (6 places for meters and seconds, 4 for
intensity) so identical clouds serialize byte-identically on any platform.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .physics import PointCloud

FIELDS = ("x", "y", "z", "intensity", "ring", "instance_id", "material_index", "timestamp")


def _format_rows(points: PointCloud, sep: str) -> list[str]:
    rows = []
    for k in range(len(points)):
        rows.append(sep.join((
            f"{points.x[k]:.6f}",
            f"{points.y[k]:.6f}",
            f"{points.z[k]:.6f}",
            f"{points.intensity[k]:.4f}",
            f"{int(points.ring[k])}",
            f"{int(points.instance_id[k])}",
            f"{int(points.material_index[k])}",
            f"{points.timestamp[k]:.6f}",
        )))
    return rows


def write_ply(points: PointCloud, path: str | Path) -> None:
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(points)}",
        "property float x",
        "property float y",
        "property float z",
        "property float intensity",
        "property ushort ring",
        "property uint instance_id",
        "property uchar material_index",
        "property double timestamp",
        "end_header",
    ]
    lines.extend(_format_rows(points, " "))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def write_pcd(points: PointCloud, path: str | Path) -> None:
    n = len(points)
    lines = [
        "# .PCD v0.7 - Point Cloud Data file format",
        "VERSION 0.7",
        "FIELDS x y z intensity ring instance_id material_index timestamp",
        "SIZE 4 4 4 4 2 4 1 8",
        "TYPE F F F F U U U F",
        "COUNT 1 1 1 1 1 1 1 1",
        f"WIDTH {n}",
        "HEIGHT 1",
        "VIEWPOINT 0 0 0 1 0 0 0",
        f"POINTS {n}",
        "DATA ascii",
    ]
    lines.extend(_format_rows(points, " "))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def write_csv(points: PointCloud, path: str | Path) -> None:
    lines = [",".join(FIELDS)]
    lines.extend(_format_rows(points, ","))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


_WRITERS = {"ply": write_ply, "pcd": write_pcd, "csv": write_csv}


def write_cloud(points: PointCloud, format: str, path: str | Path) -> None:
    try:
        writer = _WRITERS[format]
    except KeyError:
        raise ValueError(f"unsupported cloud format {format!r}") from None
    writer(points, path)


# ---------------------------------------------------------------------------
# readers (for round-trip checks and downstream tooling)

def _rows_to_cloud(rows: list[list[str]], path: Path) -> PointCloud:
    if rows and len(rows[0]) != len(FIELDS):
        raise ValueError(f"{path.name}: expected {len(FIELDS)} columns, got {len(rows[0])}")
    cols = list(zip(*rows)) if rows else [[] for _ in FIELDS]
    x, y, z, inten, ring, inst, mat, ts = (np.asarray(c) for c in cols)
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    z = z.astype(np.float64)
    rng = np.sqrt(x * x + y * y + z * z)
    theta = np.mod(np.arctan2(y, x), 2.0 * np.pi)
    with np.errstate(invalid="ignore"):
        phi = np.arcsin(np.clip(np.divide(z, rng, out=np.zeros_like(z), where=rng > 0), -1, 1))
    return PointCloud(
        x=x, y=y, z=z,
        range=rng,
        intensity=inten.astype(np.float64),
        theta=theta,
        phi=phi,
        ring=ring.astype(np.int32),
        instance_id=inst.astype(np.uint32),
        material_index=mat.astype(np.uint8),
        timestamp=ts.astype(np.float64),
    )


def read_cloud(path: str | Path, format: str | None = None) -> PointCloud:
    """Parse a cloud written by write_cloud.

    range/theta/phi are reconstructed from x, y, z (they are not serialized).
    """
    path = Path(path)
    fmt = format or path.suffix.lstrip(".").lower()
    text = path.read_text(encoding="ascii").splitlines()
    if fmt == "ply":
        try:
            start = text.index("end_header") + 1
        except ValueError:
            raise ValueError(f"{path.name}: missing PLY header") from None
        rows = [line.split() for line in text[start:] if line.strip()]
    elif fmt == "pcd":
        starts = [k for k, line in enumerate(text) if line.startswith("DATA")]
        if not starts:
            raise ValueError(f"{path.name}: missing PCD DATA line")
        rows = [line.split() for line in text[starts[0] + 1:] if line.strip()]
    elif fmt == "csv":
        rows = [line.split(",") for line in text[1:] if line.strip()]
    else:
        raise ValueError(f"unsupported cloud format {fmt!r}")
    return _rows_to_cloud(rows, path)
