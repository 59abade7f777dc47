"""Nonholonomic TSD path planning over alternating straight/turn waypoints."""

from __future__ import annotations

import math

import numpy as np

from ..spatial import PlanarPose, wrap_angle
from .types import MotionKind, TrapezoidalProfile, TsdTrajectory, Waypoint

DEFAULT_V_MAX = 0.25
DEFAULT_W_MAX = 0.20
DEFAULT_A_MAX = 0.25
DEFAULT_ALPHA_MAX = 0.20


class InfeasibleSegmentError(ValueError):
    def __init__(self, index: int, message: str):
        super().__init__(f"segment {index}: {message}")
        self.index = index


def validate_route(waypoints: list[Waypoint]) -> list[str]:
    """Alternation, monotone timing, and nonholonomic feasibility diagnostics."""
    issues = []
    for i, (a, b) in enumerate(zip(waypoints, waypoints[1:])):
        if b.transit_time <= a.transit_time:
            issues.append(f"segment {i}: transit times must be strictly increasing")
        moved = a.pose.distance_to(b.pose) > 1e-9
        turned = abs(wrap_angle(b.pose.yaw - a.pose.yaw)) > 1e-9
        if moved and turned:
            issues.append(f"segment {i}: waypoints must change position or heading, not both")
        if b.motion_kind is MotionKind.STRAIGHT and turned:
            issues.append(f"segment {i}: straight segment may not change heading")
        if b.motion_kind is MotionKind.TURN and moved:
            issues.append(f"segment {i}: turn segment may not translate")
        if b.motion_kind is MotionKind.STRAIGHT and moved:
            dx = b.pose.x - a.pose.x
            dy = b.pose.y - a.pose.y
            heading = a.pose.yaw
            lateral = -math.sin(heading) * dx + math.cos(heading) * dy
            if abs(lateral) > 1e-6:
                issues.append(f"segment {i}: lateral displacement {lateral:.4f} m on a straight")
    kinds = [w.motion_kind for w in waypoints[1:]]
    for i, (k0, k1) in enumerate(zip(kinds, kinds[1:])):
        if k0 is k1:
            issues.append(f"segment {i + 1}: motion kinds must alternate straight/turn")
    return issues


def plan_tsd_path(waypoints: list[Waypoint], dt: float = 0.005,
                  rotation_center=(0.0, 0.0),
                  v_max: float = DEFAULT_V_MAX, a_max: float = DEFAULT_A_MAX,
                  w_max: float = DEFAULT_W_MAX, alpha_max: float = DEFAULT_ALPHA_MAX) -> TsdTrajectory:
    """Trapezoid-interpolated steering trajectory through timed waypoints.

    Straight segments translate along the current heading; turn segments
    rotate in place about the steering point (the configured rotation
    center). Each waypoint is reached at its transit time.
    """
    rc = np.asarray(rotation_center, dtype=float)
    if len(waypoints) == 0:
        return TsdTrajectory(np.zeros(0), np.zeros((0, 3)), np.zeros((0, 3)), rc)
    if len(waypoints) == 1:
        t0 = waypoints[0].transit_time
        p = waypoints[0].pose
        return TsdTrajectory(np.array([t0]), np.array([[p.x, p.y, p.yaw]]),
                             np.zeros((1, 3)), rc)

    issues = validate_route(waypoints)
    if issues:
        idx = int(issues[0].split()[1].rstrip(":"))
        raise InfeasibleSegmentError(idx, "; ".join(issues))

    times: list[float] = []
    poses: list[list[float]] = []
    twists: list[list[float]] = []
    for i, (a, b) in enumerate(zip(waypoints, waypoints[1:])):
        duration = b.transit_time - a.transit_time
        if b.motion_kind is MotionKind.STRAIGHT:
            dx = b.pose.x - a.pose.x
            dy = b.pose.y - a.pose.y
            heading = a.pose.yaw
            dist = math.cos(heading) * dx + math.sin(heading) * dy
            try:
                prof = TrapezoidalProfile.for_duration(dist, duration, v_max, a_max)
            except ValueError as exc:
                raise InfeasibleSegmentError(i, str(exc)) from exc
        else:
            dyaw = wrap_angle(b.pose.yaw - a.pose.yaw)
            try:
                prof = TrapezoidalProfile.for_duration(dyaw, duration, w_max, alpha_max)
            except ValueError as exc:
                raise InfeasibleSegmentError(i, str(exc)) from exc

        n = max(1, int(round(duration / dt)))
        for k in range(n):
            t = k * dt
            s, v, _ = prof.sample(t)
            times.append(a.transit_time + t)
            if b.motion_kind is MotionKind.STRAIGHT:
                c, sn = math.cos(a.pose.yaw), math.sin(a.pose.yaw)
                poses.append([a.pose.x + c * s, a.pose.y + sn * s, a.pose.yaw])
                twists.append([v, 0.0, 0.0])
            else:
                poses.append([a.pose.x, a.pose.y, a.pose.yaw + s])
                twists.append([0.0, 0.0, v])
    last = waypoints[-1]
    times.append(last.transit_time)
    poses.append([last.pose.x, last.pose.y, last.pose.yaw])
    twists.append([0.0, 0.0, 0.0])
    return TsdTrajectory(np.array(times), np.array(poses), np.array(twists), rc)


def lateral_accel_of_point(traj: TsdTrajectory, body_point, dt: float = 0.02) -> np.ndarray:
    """Finite-difference lateral acceleration of a body-frame point (comfort check)."""
    if traj.duration <= 2 * dt:
        return np.zeros(0)
    ts = np.arange(traj.times[0], traj.times[-1] - dt, dt)
    pts = []
    yaws = []
    for t in ts:
        steer = traj.pose_at(t)
        rc = traj.rotation_center
        body = steer.compose(PlanarPose(-rc[0], -rc[1], 0.0))
        pts.append(body.transform_point(body_point))
        yaws.append(body.yaw)
    pts = np.array(pts)
    acc = (pts[2:] - 2 * pts[1:-1] + pts[:-2]) / dt ** 2
    lat = np.zeros(len(acc))
    for i, yaw in enumerate(yaws[1:-1]):
        lat[i] = -math.sin(yaw) * acc[i, 0] + math.cos(yaw) * acc[i, 1]
    return lat
