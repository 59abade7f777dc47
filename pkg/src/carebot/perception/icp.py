"""Dense projective point-to-plane ICP against the coarse object model.

Three stages per iteration: project the posed model samples into the
distorted image, associate each with the scene point at its pixel (gated by
Euclidean distance and normal angle), and solve the linearized point-to-
plane system for a small pose update. A coarse-to-fine pyramid absorbs poor
initial poses; the optimum of one frame seeds the next.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..spatial import PlanarPose, Pose3, quat_from_axis_angle, quat_from_matrix, quat_to_matrix
from .camera import CameraModel
from .cloud import PointCloud
from .mesh import TriMesh
from .render import DepthImage


@dataclass(frozen=True)
class IcpParams:
    pyramid: tuple = (4, 2, 1)
    max_iterations: int = 10
    radius_coarse: float = 0.10
    radius_fine: float = 0.03
    normal_gate: float = math.radians(30.0)
    convergence_threshold: float = 2.5e-4
    inlier_floor: float = 0.2
    sample_spacing: float = 0.02
    max_samples: int = 3600
    damping: float = 1e-3
    coarse_weak_rel: float = 0.01
    verify_radius: float = 0.02
    verify_floor: float = 0.80

    def __post_init__(self):
        if len(self.pyramid) < 1:
            raise ValueError("need at least one pyramid level")
        if self.radius_coarse <= 0 or self.radius_fine <= 0:
            raise ValueError("search radii must be positive")

    def radius_for_level(self, index: int) -> float:
        if len(self.pyramid) == 1:
            return self.radius_fine
        a = index / (len(self.pyramid) - 1)
        return self.radius_coarse * (1 - a) + self.radius_fine * a


@dataclass(frozen=True)
class TrackedPose:
    """Tracker output: camera<-object pose plus convergence diagnostics."""

    pose: Pose3
    timestamp: float
    residual: float
    inlier_fraction: float
    converged: bool
    condition: float = float("inf")
    unconstrained_dofs: int = 0

    def __post_init__(self):
        if self.residual < 0:
            raise ValueError("residual must be non-negative")
        if not (0.0 <= self.inlier_fraction <= 1.0):
            raise ValueError("inlier fraction must lie in [0, 1]")


_SAMPLE_CACHE: dict = {}


def sample_mesh_points(mesh: TriMesh, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    """Vertices plus face-interior samples at roughly the given spacing.

    Returns (points, per-point face normals) in the object frame.
    """
    key = (id(mesh), round(spacing, 6))
    hit = _SAMPLE_CACHE.get(key)
    if hit is not None and hit[0] is mesh:
        return hit[1], hit[2]
    pts, nrm = [], []
    for tri, n in zip(mesh.triangles, mesh.normals):
        a, b, c = mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]
        nu = max(1, int(math.ceil(float(np.linalg.norm(b - a)) / spacing)))
        nv = max(1, int(math.ceil(float(np.linalg.norm(c - a)) / spacing)))
        us = np.arange(nu + 1) / nu
        vs = np.arange(nv + 1) / nv
        uu, vv = np.meshgrid(us, vs, indexing="ij")
        keep = uu + vv <= 1.0 + 1e-12
        u, v = uu[keep], vv[keep]
        p = a + u[:, None] * (b - a) + v[:, None] * (c - a)
        pts.append(p)
        nrm.append(np.tile(n, (len(p), 1)))
    points = np.vstack(pts) if pts else np.zeros((0, 3))
    normals = np.vstack(nrm) if nrm else np.zeros((0, 3))
    _SAMPLE_CACHE[key] = (mesh, points, normals)
    return points, normals


@dataclass(frozen=True)
class Correspondences:
    model_pts: np.ndarray     # (K, 3) camera frame
    scene_pts: np.ndarray     # (K, 3)
    scene_normals: np.ndarray
    candidates: int           # samples that projected into the image


def match_correspondences(model_pts: np.ndarray, model_normals: np.ndarray,
                          cloud: PointCloud, cam: CameraModel,
                          radius: float, normal_gate: float) -> Correspondences:
    """Projective association: model sample -> scene point at its pixel.

    Pairs must pass both the Euclidean radius and the normal angle gate;
    the association is one-to-one in the projective sense (one scene pixel
    per projected sample).
    """
    px, valid = cam.project(model_pts)
    j = np.round(px[:, 0]).astype(int)
    i = np.round(px[:, 1]).astype(int)
    H, W = cloud.point_valid.shape
    inb = valid & (j >= 0) & (j < W) & (i >= 0) & (i < H)
    candidates = int(np.count_nonzero(inb))
    if candidates == 0:
        z = np.zeros((0, 3))
        return Correspondences(z, z, z, 0)
    pm = model_pts[inb]
    nm = model_normals[inb]
    ii, jj = i[inb], j[inb]
    ok = cloud.normal_valid[ii, jj]
    ps = np.where(ok[:, None], cloud.points[ii, jj], 0.0)
    ns = np.where(ok[:, None], cloud.normals[ii, jj], 0.0)
    dist_ok = np.linalg.norm(ps - pm, axis=1) <= radius
    ang_ok = np.einsum("ij,ij->i", ns, nm) >= math.cos(normal_gate)
    keep = ok & dist_ok & ang_ok
    return Correspondences(pm[keep], ps[keep], ns[keep], candidates)


@dataclass(frozen=True)
class PlaneSolveResult:
    delta: np.ndarray         # (6,) [rotation vector, translation]
    condition: float
    unconstrained_dofs: int
    rms_before: float


def solve_point_to_plane(model_pts: np.ndarray, scene_pts: np.ndarray,
                         scene_normals: np.ndarray, weights: np.ndarray | None = None,
                         degeneracy_rel: float = 1e-7, damping: float = 0.0,
                         weak_rel: float | None = None,
                         report_rel: float = 1e-3) -> PlaneSolveResult:
    """Small-motion update minimizing sum w (n . (p + w x p + t - q))^2.

    Rank-deficient systems (a single plane leaves 3 DoF free) are solved in
    the constrained subspace: singular directions below `degeneracy_rel`
    are zeroed and reported as unconstrained. `weak_rel`, when set, freezes
    merely weakly observed directions as well; coarse pyramid levels use it
    so quantization noise cannot drift the pose along a weak axis.
    """
    if len(model_pts) < 6:
        raise ValueError("need at least 6 correspondences")
    J = np.hstack([np.cross(model_pts, scene_normals), scene_normals])
    r = np.einsum("ij,ij->i", scene_normals, scene_pts - model_pts)
    if weights is None:
        Jw, rw = J, r
    else:
        Jw = J * weights[:, None]
        rw = r * weights
    H = J.T @ Jw
    g = J.T @ rw
    # mild damping: keeps weakly observed directions from exploding without
    # disturbing the exact fixed point (g -> 0 there)
    H = H + (damping * np.trace(H) / 6.0) * np.eye(6)
    U, s, Vt = np.linalg.svd(H)
    # reporting threshold is looser than the step cutoff: directions this
    # weak are effectively unobserved even though the solve stays exact
    unconstrained = int(np.count_nonzero(s <= s[0] * report_rel))
    step_cutoff = s[0] * max(degeneracy_rel, weak_rel or 0.0)
    inv_s = np.where(s > step_cutoff, 1.0 / np.maximum(s, 1e-300), 0.0)
    delta = Vt.T @ (inv_s * (U.T @ g))
    condition = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    rms = float(np.sqrt(np.mean(r * r)))
    return PlaneSolveResult(delta, condition, unconstrained, rms)


def clamp_increment(delta: np.ndarray, max_rot: float = 0.3, max_trans: float = 0.15) -> np.ndarray:
    """Safety cap against catastrophic single steps; inactive in normal runs."""
    out = delta.copy()
    rot = float(np.linalg.norm(out[:3]))
    if rot > max_rot:
        out[:3] *= max_rot / rot
    trans = float(np.linalg.norm(out[3:]))
    if trans > max_trans:
        out[3:] *= max_trans / trans
    return out


def _not_occluded(sample_range: np.ndarray, scene_depth: np.ndarray,
                  margin: float) -> np.ndarray:
    """Self-occlusion filter against the observed depth: a sample claiming to
    sit well behind the measured surface at its pixel is occluded; samples at
    pixels with no measurement stay candidates (they simply will not match)."""
    return ~((scene_depth > 0.0) & (sample_range > scene_depth + margin))


def apply_increment(pose: Pose3, delta: np.ndarray) -> Pose3:
    """Left-multiply the camera-frame increment [w, t] onto the pose."""
    w = delta[:3]
    angle = float(np.linalg.norm(w))
    q = quat_from_axis_angle(w, angle) if angle > 0 else np.array([1.0, 0.0, 0.0, 0.0])
    inc = Pose3(q, delta[3:], pose.parent_frame, pose.parent_frame)
    return inc.compose(pose)


def _gather_scene(depth: np.ndarray, rays: np.ndarray, py: np.ndarray, px: np.ndarray,
                  max_spread: float = float("inf")):
    """Subpixel scene points and patch normals at float pixel coordinates.

    Bilinear interpolation over the 2x2 cell removes the pixel-rounding bias
    that otherwise drags the pose along grazing surfaces. `max_spread`
    rejects cells crossing a depth edge, whose blended normals would bias
    the solve systematically.
    """
    H, W = depth.shape
    i0 = np.clip(np.floor(py).astype(int), 0, H - 2)
    j0 = np.clip(np.floor(px).astype(int), 0, W - 2)
    fy = np.clip(py - i0, 0.0, 1.0)[:, None]
    fx = np.clip(px - j0, 0.0, 1.0)[:, None]
    d00 = depth[i0, j0]
    d01 = depth[i0, j0 + 1]
    d10 = depth[i0 + 1, j0]
    d11 = depth[i0 + 1, j0 + 1]
    ok = (d00 > 0) & (d01 > 0) & (d10 > 0) & (d11 > 0)
    stack = np.stack([d00, d01, d10, d11])
    ok &= (stack.max(axis=0) - stack.min(axis=0)) <= max_spread
    p00 = rays[i0, j0] * d00[:, None]
    p01 = rays[i0, j0 + 1] * d01[:, None]
    p10 = rays[i0 + 1, j0] * d10[:, None]
    p11 = rays[i0 + 1, j0 + 1] * d11[:, None]
    top = p00 * (1 - fx) + p01 * fx
    bot = p10 * (1 - fx) + p11 * fx
    p = top * (1 - fy) + bot * fy
    # normal of the bilinear patch from the same four gathers
    dxv = 0.5 * (p01 + p11 - p00 - p10)
    dyv = 0.5 * (p10 + p11 - p00 - p01)
    n = np.cross(dxv, dyv)
    lens = np.linalg.norm(n, axis=1)
    ok &= lens > 1e-12
    n = n / np.maximum(lens, 1e-15)[:, None]
    flip = np.einsum("ij,ij->i", n, p) > 0
    n[flip] *= -1.0
    ok &= np.all(np.isfinite(p), axis=1)
    return p, n, ok


def track(img: DepthImage, mesh: TriMesh, prior: TrackedPose, params: IcpParams) -> TrackedPose:
    """Coarse-to-fine projective ICP from the prior pose.

    The pyramid result is verified by re-matching at a tight radius; a
    failed verification triggers one retry with halved search radii (wide
    gates can capture a repeated-structure alias such as the two parallel
    bed decks). Returns the prior unchanged (converged=False) when too
    little of the model finds scene support.
    """
    if not np.all(np.isfinite(prior.pose.translation)):
        raise ValueError("prior pose must be finite")
    first = _run_pyramid(img, mesh, prior.pose, params, radius_scale=1.0)
    chosen = first
    support = _verify_support(img, mesh, first.pose, params)
    if not (first.converged and not first.starved and support >= params.verify_floor):
        # a failed run usually means a repeated-structure alias captured the
        # solve or gates starved; restart from the prior with wider gates so
        # the counter-pulling surfaces stay in play
        retry = _run_pyramid(img, mesh, prior.pose, params, radius_scale=1.8)
        retry_support = _verify_support(img, mesh, retry.pose, params)
        if (retry.converged, retry_support) > (first.converged, support):
            chosen = retry
            support = retry_support
    if chosen.starved:
        # too little of the model found scene support: hold the prior
        return replace(prior, timestamp=img.timestamp, converged=False)
    converged = chosen.converged and support >= params.verify_floor
    return TrackedPose(chosen.pose, img.timestamp, chosen.residual, chosen.inliers,
                       converged, chosen.condition, chosen.unconstrained)


def _verify_support(img: DepthImage, mesh: TriMesh, pose: Pose3, params: IcpParams) -> float:
    """Worst per-face-orientation support at a tight plane distance.

    A repeated-structure alias (the two parallel bed decks) can keep most
    samples happy while an entire face family misses; taking the minimum
    over sufficiently populated normal classes exposes it.
    """
    cam = img.camera
    rays = np.nan_to_num(cam.pixel_rays(), nan=0.0)
    depth = img.depth.astype(float)
    samples, normals = sample_mesh_points(mesh, params.sample_spacing * 2)
    if len(samples) > 2500:
        stride = int(math.ceil(len(samples) / 2500))
        samples, normals = samples[::stride], normals[::stride]
    R = quat_to_matrix(pose.rotation)
    P = samples @ R.T + pose.translation
    N = normals @ R.T
    front = np.einsum("ij,ij->i", N, P) < 0.0
    Pf = P[front]
    px, valid = cam.project(Pf)
    jj = np.round(px[:, 0]).astype(int)
    ii = np.round(px[:, 1]).astype(int)
    inb = valid & (jj >= 1) & (jj < cam.width - 1) & (ii >= 1) & (ii < cam.height - 1)
    if int(np.count_nonzero(inb)) < 6:
        return 0.0
    pm = Pf[inb]
    vis = _not_occluded(np.linalg.norm(pm, axis=1), depth[ii[inb], jj[inb]], margin=0.05)
    if int(np.count_nonzero(vis)) < 6:
        return 0.0
    pxf = px[inb][vis]
    ps, ns, ok = _gather_scene(depth, rays, pxf[:, 1], pxf[:, 0], max_spread=0.25)
    plane_dist = np.abs(np.einsum("ij,ij->i", ns, ps - pm[vis]))
    good = ok & (plane_dist <= params.verify_radius)
    n_vis = int(np.count_nonzero(vis))
    n_ok = int(np.count_nonzero(ok))
    if n_ok < max(6, int(0.25 * n_vis)):
        return 0.0  # too little evaluable overlap to trust the pose
    return float(np.count_nonzero(good)) / n_ok


@dataclass(frozen=True)
class _PyramidResult:
    pose: Pose3
    residual: float
    inliers: float
    condition: float
    unconstrained: int
    converged: bool
    starved: bool


def _run_pyramid(img: DepthImage, mesh: TriMesh, pose: Pose3, params: IcpParams,
                 radius_scale: float) -> _PyramidResult:
    """Coarse-to-fine schedule plus a tight polish pass at full resolution."""
    schedule = []
    for li, factor in enumerate(params.pyramid):
        weak = params.coarse_weak_rel if li < len(params.pyramid) - 1 else None
        schedule.append((factor, params.radius_for_level(li) * radius_scale,
                         weak, params.max_iterations))

    state = _PyramidResult(pose, float("inf"), 0.0, float("inf"), 0, False, False)
    for factor, radius, weak_rel, iterations in schedule:
        state = _run_level(img, mesh, state, params, factor, radius, weak_rel, iterations)
        if state.starved:
            return state
    # tight polish pass: sharpens the pose but may not re-hit the update
    # threshold in its few iterations, so it never unsets convergence
    fine_converged = state.converged
    state = _run_level(img, mesh, state, params, params.pyramid[-1],
                       max(0.015, 0.5 * params.radius_fine * radius_scale), None, 3)
    if fine_converged and not state.starved:
        state = replace(state, converged=True)
    return state


def _run_level(img: DepthImage, mesh: TriMesh, state: _PyramidResult, params: IcpParams,
               factor: int, radius: float, weak_rel, iterations: int) -> _PyramidResult:
    level = img.downsampled(factor) if factor > 1 else img
    cam = level.camera
    rays = np.nan_to_num(cam.pixel_rays(), nan=0.0)
    depth = level.depth.astype(float)
    samples, normals = sample_mesh_points(mesh, params.sample_spacing * factor)
    budget = max(1500, params.max_samples // factor)
    if len(samples) > budget:
        stride = int(math.ceil(len(samples) / budget))
        samples, normals = samples[::stride], normals[::stride]

    pose = state.pose
    residual, inliers = state.residual, state.inliers
    condition, unconstrained = state.condition, state.unconstrained
    level_converged = False
    starved = False
    best_rms = float("inf")
    best_pose = pose
    prev_step = float("inf")
    min_step = float("inf")
    for _ in range(iterations):
        R = quat_to_matrix(pose.rotation)
        P = samples @ R.T + pose.translation
        N = normals @ R.T
        front = np.einsum("ij,ij->i", N, P) < 0.0
        Pf, Nf = P[front], N[front]
        px, valid = cam.project(Pf)
        jj = np.round(px[:, 0]).astype(int)
        ii = np.round(px[:, 1]).astype(int)
        inb = valid & (jj >= 1) & (jj < cam.width - 1) & (ii >= 1) & (ii < cam.height - 1)
        if int(np.count_nonzero(inb)) < 6:
            starved = True
            break
        pm, nm = Pf[inb], Nf[inb]
        vis = _not_occluded(np.linalg.norm(pm, axis=1), depth[ii[inb], jj[inb]],
                            margin=radius + 0.02 * factor)
        n_candidates = int(np.count_nonzero(vis))
        if n_candidates < 6:
            starved = True
            break
        pm, nm = pm[vis], nm[vis]
        pxf = px[inb][vis]
        ps, ns, ok = _gather_scene(depth, rays, pxf[:, 1], pxf[:, 0],
                                   max_spread=0.12 * factor)
        # gate on the plane distance the solver minimizes; the Euclidean
        # backstop only rejects cross-surface junk (grazing surfaces blow
        # up the Euclidean metric long before the plane metric)
        plane_dist = np.abs(np.einsum("ij,ij->i", ns, ps - pm))
        gate = ok & (plane_dist <= radius)
        gate &= np.linalg.norm(ps - pm, axis=1) <= 3.0 * radius
        gate &= np.einsum("ij,ij->i", ns, nm) >= math.cos(params.normal_gate)
        k = int(np.count_nonzero(gate))
        inliers = k / max(1, n_candidates)
        if k < 6 or inliers < params.inlier_floor:
            starved = True
            break
        result = solve_point_to_plane(pm[gate], ps[gate], ns[gate],
                                      damping=params.damping, weak_rel=weak_rel)
        residual = result.rms_before
        condition = result.condition
        unconstrained = result.unconstrained_dofs
        if residual < best_rms:
            best_rms = residual
            best_pose = pose
        pose = apply_increment(pose, clamp_increment(result.delta))
        step = float(np.linalg.norm(result.delta))
        min_step = min(min_step, step)
        if step < params.convergence_threshold * factor:
            level_converged = True
            break
        if step > 0.8 * prev_step and prev_step < 8 * params.convergence_threshold * factor:
            # correspondence flicker: the step stopped shrinking at a level
            # far below the tolerances; count the plateau as converged
            level_converged = True
            break
        prev_step = step
    if not level_converged and best_rms < residual:
        pose = best_pose  # divergence recovery: keep the level's best pose
    return _PyramidResult(pose, residual, inliers, condition, unconstrained,
                          level_converged, starved)


def robot_relative_pose(tracked: TrackedPose, head_chain: Pose3) -> PlanarPose:
    """Ground-plane pose of the object in the robot frame via the kinematic chain."""
    robot_obj = head_chain.compose(tracked.pose)
    return PlanarPose.from_pose3(robot_obj)


def forward_camera_chain(height: float = 1.5, pitch_down: float = 0.0,
                         robot_frame: str = "robot", camera_frame: str = "camera") -> Pose3:
    """robot<-camera for a forward-looking head camera (z optical axis forward).

    The base change maps camera z to robot x, camera x to robot -y, camera
    y to robot -z; a positive pitch tilts the optical axis downward.
    """
    R_axes = np.array([
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ])
    base = Pose3(quat_from_matrix(R_axes), (0.0, 0.0, height), robot_frame, camera_frame)
    if abs(pitch_down) > 0:
        tilt = Pose3.from_axis_angle((1.0, 0.0, 0.0), pitch_down,
                                     parent_frame=camera_frame, child_frame=camera_frame)
        base = base.compose(tilt)
    return base
