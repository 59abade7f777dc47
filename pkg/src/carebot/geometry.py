"""Small 2D convex-polygon helpers used for support polygons and contact patches.

Polygons are (N, 2) float arrays of CCW vertices. All operations assume
convexity; `convex_hull` is the constructor of choice for raw point sets.
"""

from __future__ import annotations

import math

import numpy as np


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull, CCW, no duplicate endpoint."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def rectangle(cx: float, cy: float, length: float, width: float, yaw: float = 0.0) -> np.ndarray:
    """Axis lengths follow x (length) and y (width) of the local frame."""
    hx, hy = 0.5 * length, 0.5 * width
    corners = np.array([[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]])
    c, s = math.cos(yaw), math.sin(yaw)
    R = np.array([[c, -s], [s, c]])
    return corners @ R.T + np.array([cx, cy])


def polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    return np.mean(np.asarray(poly, dtype=float), axis=0)


def contains_point(poly: np.ndarray, pt, tol: float = 1e-12) -> bool:
    """Point-in-convex-polygon via edge cross products (CCW polygon)."""
    poly = np.asarray(poly, dtype=float)
    pt = np.asarray(pt, dtype=float)
    if len(poly) == 0:
        return False
    if len(poly) == 1:
        return bool(np.linalg.norm(poly[0] - pt) <= tol)
    nxt = np.roll(poly, -1, axis=0)
    edge = nxt - poly
    rel = pt - poly
    cross = edge[:, 0] * rel[:, 1] - edge[:, 1] * rel[:, 0]
    return bool(np.all(cross >= -tol))


def _closest_point_on_segment(a: np.ndarray, b: np.ndarray, pt: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(np.dot(ab, ab))
    if denom < 1e-18:
        return a
    t = float(np.clip(np.dot(pt - a, ab) / denom, 0.0, 1.0))
    return a + t * ab


def clamp_to_polygon(poly: np.ndarray, pt) -> np.ndarray:
    """Nearest point of the convex polygon to pt (pt itself when inside)."""
    poly = np.asarray(poly, dtype=float)
    pt = np.asarray(pt, dtype=float)
    if len(poly) == 0:
        raise ValueError("cannot clamp to an empty polygon")
    if contains_point(poly, pt):
        return pt.copy()
    best = None
    best_d = math.inf
    for i in range(len(poly)):
        cand = _closest_point_on_segment(poly[i], poly[(i + 1) % len(poly)], pt)
        d = float(np.dot(cand - pt, cand - pt))
        if d < best_d:
            best_d = d
            best = cand
    return np.asarray(best)


def edge_normals_inward(poly: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-edge inward unit normals n and offsets d with n.x >= d inside."""
    poly = np.asarray(poly, dtype=float)
    nxt = np.roll(poly, -1, axis=0)
    edges = nxt - poly
    normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
    lens = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = normals / np.maximum(lens, 1e-15)
    offsets = np.einsum("ij,ij->i", normals, poly)
    return normals, offsets
