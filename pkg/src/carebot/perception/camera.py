"""Equidistant-fisheye depth camera model.

A pinhole cannot represent the 120-degree field of view without extreme
distortion, so the projection is r = f * theta with theta the angle from
the optical axis (+z). Pixels outside the fov circle are invalid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CameraModel:
    width: int = 512
    height: int = 512
    fov: float = math.radians(120.0)
    depth_min: float = 0.25
    depth_max: float = 5.0
    focal: float = 0.0  # px per rad; derived from fov when 0
    cx: float = -1.0
    cy: float = -1.0

    def __post_init__(self):
        if self.fov <= 0 or self.fov > math.radians(180.0):
            raise ValueError("fov must be in (0, 180] degrees")
        if self.focal <= 0.0:
            object.__setattr__(self, "focal", (self.width / 2.0) / (self.fov / 2.0))
        if self.cx < 0:
            object.__setattr__(self, "cx", (self.width - 1) / 2.0)
        if self.cy < 0:
            object.__setattr__(self, "cy", (self.height - 1) / 2.0)

    def scaled(self, factor: int) -> "CameraModel":
        """Camera of the image downsampled by an integer stride."""
        return CameraModel(self.width // factor, self.height // factor, self.fov,
                           self.depth_min, self.depth_max,
                           self.focal / factor, self.cx / factor, self.cy / factor)

    def project(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Camera-frame points (N, 3) to pixel coordinates (N, 2) + validity."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        rho = np.hypot(pts[:, 0], pts[:, 1])
        theta = np.arctan2(rho, pts[:, 2])
        r = self.focal * theta
        scale = np.where(rho > 1e-12, r / np.maximum(rho, 1e-12), 0.0)
        px = self.cx + pts[:, 0] * scale
        py = self.cy + pts[:, 1] * scale
        valid = (theta <= self.fov / 2.0) & (np.linalg.norm(pts, axis=1) > 1e-9)
        return np.stack([px, py], axis=1), valid

    def pixel_rays(self) -> np.ndarray:
        """Unit ray per pixel, (H, W, 3); NaN outside the fov circle."""
        return _ray_cache(self)

    def unproject_pixels(self, px: np.ndarray, py: np.ndarray) -> np.ndarray:
        dx = px - self.cx
        dy = py - self.cy
        r = np.hypot(dx, dy)
        theta = r / self.focal
        s = np.sin(theta)
        with np.errstate(invalid="ignore", divide="ignore"):
            ux = np.where(r > 1e-12, dx / np.maximum(r, 1e-12), 0.0)
            uy = np.where(r > 1e-12, dy / np.maximum(r, 1e-12), 0.0)
        rays = np.stack([s * ux, s * uy, np.cos(theta)], axis=-1)
        rays[theta > self.fov / 2.0] = np.nan
        return rays

    def _cache_key(self):
        return (self.width, self.height, round(self.focal, 9), round(self.cx, 6),
                round(self.cy, 6), round(self.fov, 9))


_RAYS: dict = {}


def _ray_cache(cam: CameraModel) -> np.ndarray:
    key = cam._cache_key()
    if key not in _RAYS:
        ys, xs = np.mgrid[0:cam.height, 0:cam.width].astype(float)
        _RAYS[key] = cam.unproject_pixels(xs, ys)
    return _RAYS[key]
