"""Footstep plans from velocity commands, support polygons, and ZMP references.

Future steps ride on the body reference trajectory obtained by integrating
the commanded twist exactly (arc geometry per step period); the committed
step (swing already started) is never repositioned, which is what makes
replanning idempotent and switch-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import convex_hull, rectangle
from ..spatial import PlanarPose, Twist
from .types import Foot, Footstep, FootstepPlan, GaitConfig, ZmpReference


@dataclass(frozen=True)
class FootGeometry:
    """Sole rectangle used for support polygons (x forward, y left)."""

    length: float = 0.22
    width: float = 0.13

    def corners(self, pose: PlanarPose) -> np.ndarray:
        return rectangle(pose.x, pose.y, self.length, self.width, pose.yaw)


def foot_offset(foot: Foot, stance_width: float) -> PlanarPose:
    return PlanarPose(0.0, foot.sign * 0.5 * stance_width, 0.0)


def body_pose_of_step(step: Footstep, stance_width: float) -> PlanarPose:
    return step.pose.compose(foot_offset(step.foot, stance_width).inverse())


def twist_step_delta(cmd: Twist, period: float) -> PlanarPose:
    """Exact body displacement of a constant twist over one step period."""
    if abs(cmd.wz) < 1e-9:
        return PlanarPose(cmd.vx * period, cmd.vy * period, cmd.wz * period)
    dyaw = cmd.wz * period
    s, c = math.sin(dyaw), math.cos(dyaw)
    dx = (cmd.vx * s + cmd.vy * (c - 1.0)) / cmd.wz
    dy = (cmd.vx * (1.0 - c) + cmd.vy * s) / cmd.wz
    return PlanarPose(dx, dy, dyaw)


def standing_plan(body: PlanarPose, gait: GaitConfig, t_start: float = 0.0) -> FootstepPlan:
    """Both feet planted at the nominal stance; placements dated at or before t_start.

    The later placement is dated exactly t_start so the first replanned step
    swings no earlier than t_start + double_support (one weight shift).
    """
    T = gait.timing.period
    steps = []
    for i, foot in enumerate((Foot.LEFT, Foot.RIGHT)):
        td = t_start - (1 - i) * 0.5 * T
        steps.append(Footstep(foot, body.compose(foot_offset(foot, gait.stance_width)),
                              touchdown_time=td, liftoff_time=td - gait.timing.single_support))
    return FootstepPlan(tuple(steps), gait.stride_limit, gait.lateral_limit, gait.yaw_limit)


@dataclass(frozen=True)
class ReplanResult:
    plan: FootstepPlan
    command: Twist
    saturated: bool


def saturate_twist(cmd: Twist, gait: GaitConfig) -> tuple[Twist, bool]:
    """Clamp the command to what the stride box and step rhythm can realize."""
    T = gait.timing.period
    vx_max = gait.stride_limit / T
    vy_max = gait.lateral_limit / T
    wz_max = gait.yaw_limit / T
    vx = min(max(cmd.vx, -vx_max), vx_max)
    vy = min(max(cmd.vy, -vy_max), vy_max)
    wz = min(max(cmd.wz, -wz_max), wz_max)
    sat = (vx, vy, wz) != (cmd.vx, cmd.vy, cmd.wz)
    return Twist(vx, vy, wz), sat


def replan_footsteps(cmd: Twist, current_plan: FootstepPlan, gait: GaitConfig,
                     now: float) -> ReplanResult:
    """Reposition every not-yet-committed step to follow the commanded twist.

    Steps whose swing has started (liftoff <= now) are kept verbatim; future
    steps are regenerated on the twist's integral curve, alternating feet at
    the nominal stance width, with per-step displacement clamped to the
    stride box. Deterministic in (committed prefix, cmd), hence idempotent.
    """
    cmd, saturated = saturate_twist(cmd, gait)
    committed = list(current_plan.committed_prefix(now))
    if not committed:
        raise ValueError("plan has no committed step to anchor on")
    committed = committed[-3:]  # older placements can no longer support anything
    anchor = committed[-1]
    T = gait.timing.period
    ss = gait.timing.single_support
    body = body_pose_of_step(anchor, gait.stance_width)
    delta = twist_step_delta(cmd, T)

    steps = committed
    foot = anchor.foot
    td = anchor.touchdown_time
    for _ in range(gait.plan_steps):
        foot = foot.other
        td += T
        body = body.compose(_clamp_delta(delta, gait))
        pose = body.compose(foot_offset(foot, gait.stance_width))
        steps.append(Footstep(foot, pose, touchdown_time=td, liftoff_time=td - ss))
    plan = FootstepPlan(tuple(steps), gait.stride_limit, gait.lateral_limit, gait.yaw_limit)
    return ReplanResult(plan, cmd, saturated)


def _clamp_delta(delta: PlanarPose, gait: GaitConfig) -> PlanarPose:
    return PlanarPose(
        min(max(delta.x, -gait.stride_limit), gait.stride_limit),
        min(max(delta.y, -gait.lateral_limit), gait.lateral_limit),
        min(max(delta.yaw, -gait.yaw_limit), gait.yaw_limit),
    )


def _latest_placements(plan: FootstepPlan, t: float) -> dict:
    placed = {}
    for step in plan.steps:
        if step.touchdown_time <= t:
            placed[step.foot] = step
    return placed


def _in_swing(plan: FootstepPlan, foot: Foot, t: float) -> bool:
    for step in plan.steps:
        if step.foot is foot and step.liftoff_time <= t < step.touchdown_time:
            return True
    return False


def supporting_feet(plan: FootstepPlan, t: float) -> dict:
    """Feet currently on the ground, mapped to their placements."""
    placed = _latest_placements(plan, t)
    return {f: s for f, s in placed.items() if not _in_swing(plan, f, t)}


def in_double_support(plan: FootstepPlan, t: float) -> bool:
    return len(supporting_feet(plan, t)) == 2


def support_polygon_at(plan: FootstepPlan, t: float, geom: FootGeometry) -> np.ndarray:
    """Convex hull of the supporting soles; empty array if airborne."""
    feet = supporting_feet(plan, t)
    if not feet:
        return np.zeros((0, 2))
    corners = np.vstack([geom.corners(s.pose) for s in feet.values()])
    return convex_hull(corners)


def zmp_reference_from_plan(plan: FootstepPlan, gait: GaitConfig) -> ZmpReference:
    """Classic support-center reference: hold on the stance foot during swing,
    blend linearly between foot centers during double support, and settle on
    the stance midpoint after the final step."""
    steps = plan.steps
    ds = gait.timing.double_support
    if len(steps) < 2:
        raise ValueError("plan needs at least two placements")
    # hold the stance midpoint until one weight-shift before the first swing
    if len(steps) >= 3:
        t0 = steps[2].liftoff_time - ds
    else:
        t0 = steps[1].touchdown_time
    knots_t = [t0]
    knots_p = [0.5 * (steps[0].pose.xy + steps[1].pose.xy)]

    def push(t: float, p: np.ndarray) -> None:
        if t > knots_t[-1] + 1e-12:
            knots_t.append(t)
            knots_p.append(p)
        else:
            knots_p[-1] = p

    for prev, step in zip(steps[1:], steps[2:]):
        push(step.liftoff_time, prev.pose.xy)
        push(step.touchdown_time, prev.pose.xy)
        push(step.touchdown_time + ds, step.pose.xy)
    if len(steps) >= 2:
        mid = 0.5 * (steps[-1].pose.xy + steps[-2].pose.xy)
        push(steps[-1].touchdown_time + ds + 1e-9, knots_p[-1])
        push(steps[-1].touchdown_time + 2.0 * ds, mid)
    return ZmpReference(np.array(knots_t), np.array(knots_p))
