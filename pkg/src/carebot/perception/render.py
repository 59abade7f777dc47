"""Synthetic fisheye depth rendering: the simulator's sensor and the ICP oracle.

Depth values are ranges along the per-pixel ray (not z-depth); 0 marks an
invalid pixel. The file format is a small binary container used for test
fixtures and frame dumps.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..spatial import Pose3
from .camera import CameraModel
from .mesh import TriMesh

_MAGIC = b"DPTH"


@dataclass(frozen=True)
class DepthImage:
    camera: CameraModel
    depth: np.ndarray  # (H, W) meters; 0 = invalid
    timestamp: float = 0.0

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=np.float32)
        if d.shape != (self.camera.height, self.camera.width):
            raise ValueError("depth grid does not match the camera dimensions")
        object.__setattr__(self, "depth", d)

    @property
    def valid_mask(self) -> np.ndarray:
        return self.depth > 0.0

    def valid_count(self) -> int:
        return int(np.count_nonzero(self.valid_mask))

    def downsampled(self, factor: int) -> "DepthImage":
        return DepthImage(self.camera.scaled(factor), self.depth[::factor, ::factor],
                          self.timestamp)

    def with_noise(self, sigma: float, rng: np.random.Generator) -> "DepthImage":
        noisy = self.depth.copy()
        mask = self.valid_mask
        noisy[mask] += rng.normal(0.0, sigma, size=int(mask.sum())).astype(np.float32)
        return DepthImage(self.camera, noisy, self.timestamp)


def render_depth(mesh: TriMesh, pose_cam_obj: Pose3, cam: CameraModel,
                 timestamp: float = 0.0) -> DepthImage:
    """Nearest-surface range per pixel, z-buffered over all triangles."""
    rays = cam.pixel_rays().reshape(-1, 3)
    finite = np.isfinite(rays[:, 0])
    dirs = np.where(finite[:, None], rays, 0.0)

    verts = pose_cam_obj.transform_point(mesh.vertices)
    best = np.full(len(dirs), np.inf)
    for tri in mesh.triangles:
        v0, v1, v2 = verts[tri[0]], verts[tri[1]], verts[tri[2]]
        # rays hitting the triangle lie in the cone spanned by its vertex
        # directions; prune everything outside that cone first
        vdirs = np.stack([v0, v1, v2])
        norms = np.linalg.norm(vdirs, axis=1)
        if np.any(norms < 1e-9):
            sel = slice(None)
        else:
            vdirs = vdirs / norms[:, None]
            center = vdirs.sum(axis=0)
            clen = np.linalg.norm(center)
            if clen < 0.5:  # triangle subtends a huge angle; no safe prune
                sel = slice(None)
            else:
                center /= clen
                cos_rho = float(np.min(vdirs @ center))
                cone = dirs @ center >= cos_rho - 1e-9
                sel = np.flatnonzero(cone)
                if len(sel) == 0:
                    continue
        d = dirs[sel]
        e1 = v1 - v0
        e2 = v2 - v0
        # Moller-Trumbore with all ray origins at the camera center
        pvec = np.cross(d, e2)
        det = pvec @ e1
        qvec = np.cross(-v0, e1)
        e2q = float(e2 @ qvec)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / det
            u = (pvec @ (-v0)) * inv
            v = (d @ qvec) * inv
            t = e2q * inv
        hit = (np.abs(det) > 1e-12) & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 0)
        t_hit = np.where(hit, t, np.inf)
        if isinstance(sel, slice):
            np.minimum(best, t_hit, out=best)
        else:
            best[sel] = np.minimum(best[sel], t_hit)

    depth = np.where(np.isfinite(best) & finite
                     & (best >= cam.depth_min) & (best <= cam.depth_max), best, 0.0)
    return DepthImage(cam, depth.reshape(cam.height, cam.width).astype(np.float32), timestamp)


def save_depth(img: DepthImage, path) -> None:
    header = struct.pack("<4sIIfff", _MAGIC, img.camera.width, img.camera.height,
                         img.camera.fov, img.camera.depth_min, img.camera.depth_max)
    Path(path).write_bytes(header + img.depth.astype("<f4").tobytes())


def load_depth(path, timestamp: float = 0.0) -> DepthImage:
    blob = Path(path).read_bytes()
    magic, w, h, fov, dmin, dmax = struct.unpack_from("<4sIIfff", blob, 0)
    if magic != _MAGIC:
        raise ValueError(f"not a depth file: bad magic {magic!r}")
    expected = 24 + 4 * w * h
    if len(blob) != expected:
        raise ValueError(f"depth file truncated: {len(blob)} bytes, expected {expected}")
    depth = np.frombuffer(blob, dtype="<f4", offset=24).reshape(h, w)
    cam = CameraModel(width=w, height=h, fov=float(fov),
                      depth_min=float(dmin), depth_max=float(dmax))
    return DepthImage(cam, depth.copy(), timestamp)
