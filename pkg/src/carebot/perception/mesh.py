"""Triangle meshes: the coarse bed model, box primitives, and an OBJ subset."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class TriMesh:
    """Vertices (m, object frame), triangle index triples, unit face normals.

    Watertightness is not required; the bed model is deliberately coarse.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle indices out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if self.normals is None:
            object.__setattr__(self, "normals", _face_normals(v, t))
        else:
            n = np.asarray(self.normals, dtype=float).reshape(-1, 3)
            norms = np.linalg.norm(n, axis=1)
            if n.shape[0] != t.shape[0] or (n.size and np.any(np.abs(norms - 1.0) > 1e-6)):
                raise ValueError("normals must be unit length, one per face")
            object.__setattr__(self, "normals", n)

    def merged(self, other: "TriMesh") -> "TriMesh":
        verts = np.vstack([self.vertices, other.vertices])
        tris = np.vstack([self.triangles, other.triangles + len(self.vertices)])
        return TriMesh(verts, tris)

    @property
    def n_faces(self) -> int:
        return len(self.triangles)


def _face_normals(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    if len(t) == 0:
        return np.zeros((0, 3))
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    n = np.cross(b - a, c - a)
    lens = np.linalg.norm(n, axis=1, keepdims=True)
    return n / np.maximum(lens, 1e-15)


def box_mesh(size, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Axis-aligned box, 12 triangles with outward normals."""
    sx, sy, sz = np.asarray(size, dtype=float) / 2.0
    cx, cy, cz = center
    v = np.array([
        [-sx, -sy, -sz], [sx, -sy, -sz], [sx, sy, -sz], [-sx, sy, -sz],
        [-sx, -sy, sz], [sx, -sy, sz], [sx, sy, sz], [-sx, sy, sz],
    ]) + np.array([cx, cy, cz])
    t = np.array([
        [0, 2, 1], [0, 3, 2],  # bottom (-z)
        [4, 5, 6], [4, 6, 7],  # top (+z)
        [0, 1, 5], [0, 5, 4],  # -y
        [2, 3, 7], [2, 7, 6],  # +y
        [1, 2, 6], [1, 6, 5],  # +x
        [3, 0, 4], [3, 4, 7],  # -x
    ])
    return TriMesh(v, t)


def bed_mesh(length: float = 2.0, width: float = 1.0, pedestal_height: float = 0.4,
             mattress_height: float = 0.1, board_height: float = 0.4,
             board_thickness: float = 0.05) -> TriMesh:
    """Coarse bed: pedestal, mattress slab, and head/foot boards.

    Object frame at the center of the bed footprint, z up; made of four
    boxes, which is all the detail the tracker needs.
    """
    z_mattress = pedestal_height + mattress_height
    pedestal = box_mesh((length * 0.95, width * 0.9, pedestal_height),
                        (0, 0, pedestal_height / 2))
    mattress = box_mesh((length, width, mattress_height),
                        (0, 0, pedestal_height + mattress_height / 2))
    head = box_mesh((board_thickness, width, z_mattress + board_height),
                    (length / 2 + board_thickness / 2, 0, (z_mattress + board_height) / 2))
    foot = box_mesh((board_thickness, width, z_mattress + board_height),
                    (-length / 2 - board_thickness / 2, 0, (z_mattress + board_height) / 2))
    return pedestal.merged(mattress).merged(head).merged(foot)


def save_obj(mesh: TriMesh, path) -> None:
    """ASCII OBJ subset: v and f lines only, 1-based indices."""
    lines = [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def load_obj(path) -> TriMesh:
    verts, tris = [], []
    for raw in Path(path).read_text().splitlines():
        parts = raw.split()
        if not parts or parts[0] not in ("v", "f"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise ValueError(f"malformed vertex line: {raw!r}")
            verts.append([float(x) for x in parts[1:4]])
        else:
            if len(parts) != 4:
                raise ValueError(f"only triangle faces supported: {raw!r}")
            tris.append([int(tok.split("/")[0]) - 1 for tok in parts[1:4]])
    return TriMesh(np.array(verts, dtype=float).reshape(-1, 3),
                   np.array(tris, dtype=np.int64).reshape(-1, 3))
