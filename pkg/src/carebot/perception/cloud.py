"""Depth image to organized point cloud with normals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .render import DepthImage


@dataclass(frozen=True)
class PointCloud:
    """Organized cloud: per-pixel camera-frame points and neighbor-difference normals.

    `normal_valid` is the subset of valid pixels whose four-neighborhood
    allowed a normal estimate; isolated pixels are dropped from the count.
    """

    points: np.ndarray        # (H, W, 3)
    normals: np.ndarray       # (H, W, 3)
    point_valid: np.ndarray   # (H, W) bool
    normal_valid: np.ndarray  # (H, W) bool

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.normal_valid))

    def dense_points(self) -> np.ndarray:
        return self.points[self.normal_valid]

    def dense_normals(self) -> np.ndarray:
        return self.normals[self.normal_valid]


def unproject(img: DepthImage) -> PointCloud:
    """One 3D point per valid pixel; normals from central differences,
    unit length, oriented toward the camera."""
    rays = img.camera.pixel_rays()
    depth = img.depth.astype(float)
    valid = img.valid_mask & np.isfinite(rays[..., 0])
    pts = np.where(valid[..., None], rays * depth[..., None], np.nan)

    H, W, _ = pts.shape
    normals = np.full_like(pts, np.nan)
    nvalid = np.zeros((H, W), dtype=bool)
    if H >= 3 and W >= 3:
        c = pts[1:-1, 1:-1]
        dx = pts[1:-1, 2:] - pts[1:-1, :-2]
        dy = pts[2:, 1:-1] - pts[:-2, 1:-1]
        n = np.cross(dx, dy)
        lens = np.linalg.norm(n, axis=-1)
        ok = (valid[1:-1, 1:-1] & valid[1:-1, 2:] & valid[1:-1, :-2]
              & valid[2:, 1:-1] & valid[:-2, 1:-1] & (lens > 1e-12))
        with np.errstate(invalid="ignore"):
            n = n / np.maximum(lens, 1e-15)[..., None]
        # orient toward the camera: n . p must be negative
        flip = np.einsum("ijk,ijk->ij", n, c) > 0
        n[flip] *= -1.0
        normals[1:-1, 1:-1] = np.where(ok[..., None], n, np.nan)
        nvalid[1:-1, 1:-1] = ok
    return PointCloud(pts, normals, valid, nvalid)
