"""Coupling the walking robot to the TSD: footsteps from the cart trajectory,
manipulation-force feed-forward into the ZMP reference, hand admittance, and
perception-aided route correction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..lipm.control import Admittance
from ..lipm.footsteps import foot_offset
from ..lipm.types import Foot, Footstep, FootstepPlan, GaitConfig
from ..spatial import PlanarPose, wrap_angle
from .arm import PlanarArm
from .types import GraspConfig, ManipForceProfile, PhaseForceTable, TsdTrajectory, Waypoint


class GraspMarginError(RuntimeError):
    def __init__(self, t: float, margin: float, threshold: float):
        super().__init__(f"arm joint-range margin {margin:.3f} rad below threshold "
                         f"{threshold:.3f} at t={t:.2f} s")
        self.time = t


DEFAULT_ROBOT_OFFSET = PlanarPose(-0.80, 0.0, 0.0)  # body 0.55 m behind the rail


def generate_footsteps_from_tsd(traj: TsdTrajectory, grasp: GraspConfig,
                                nominal_offset: PlanarPose, gait: GaitConfig,
                                arms: tuple[PlanarArm, PlanarArm] | None = None) -> FootstepPlan:
    """Footsteps that keep the body at the nominal offset behind the moving TSD.

    The body reference at each touchdown is the future TSD pose composed with
    the offset; the grasp margin of both reduced arms is checked at every
    step and a violation rejects the plan with the offending time.
    """
    if traj.duration < 2.0 * gait.timing.period:
        raise ValueError("trajectory must span at least two step periods")
    arms = arms or (PlanarArm("left"), PlanarArm("right"))
    targets = grasp.planar_targets()

    t0 = float(traj.times[0])
    T = gait.timing.period
    n_steps = int(math.floor(traj.duration / T)) + 2  # cover the tail
    steps = []
    # standing prefix at the initial offset pose
    body0 = traj.body_pose_at(t0).compose(nominal_offset)
    for i, foot in enumerate((Foot.LEFT, Foot.RIGHT)):
        td = t0 - (1 - i) * 0.5 * T
        steps.append(Footstep(foot, body0.compose(foot_offset(foot, gait.stance_width)),
                              touchdown_time=td, liftoff_time=td - gait.timing.single_support))
    foot = Foot.RIGHT
    for k in range(1, n_steps + 1):
        t_k = min(t0 + k * T, t0 + traj.duration)
        foot = foot.other
        tsd_body = traj.body_pose_at(t_k)
        body = tsd_body.compose(nominal_offset)
        _check_grasp_margin(arms, targets, grasp.joint_margin, body, tsd_body, t_k)
        pose = body.compose(foot_offset(foot, gait.stance_width))
        steps.append(Footstep(foot, pose, touchdown_time=t0 + k * T,
                              liftoff_time=t0 + k * T - gait.timing.single_support))
    plan = FootstepPlan(tuple(steps), gait.stride_limit, gait.lateral_limit, gait.yaw_limit)
    _check_stride_limits(plan, gait)
    return plan


def _check_grasp_margin(arms, targets, threshold, body: PlanarPose, tsd_body: PlanarPose,
                        t: float) -> None:
    for arm in arms:
        hand_xy = tsd_body.transform_point(targets[arm.side])
        margin = arm.margin(body, hand_xy, tsd_body.yaw)
        if margin < threshold:
            raise GraspMarginError(t, margin, threshold)


def _check_stride_limits(plan: FootstepPlan, gait: GaitConfig) -> None:
    for a, b in zip(plan.steps, plan.steps[1:]):
        rel = a.pose.inverse().compose(b.pose)
        if abs(rel.x) > gait.stride_limit + 1e-9:
            raise ValueError(f"stride {rel.x:.3f} m exceeds limit before t={b.touchdown_time:.2f}")
        if abs(rel.yaw) > gait.yaw_limit + 1e-9:
            raise ValueError(f"step yaw {rel.yaw:.3f} rad exceeds limit before t={b.touchdown_time:.2f}")


def build_force_profile(traj: TsdTrajectory, table: PhaseForceTable, loaded: bool,
                        sample_dt: float = 0.05) -> ManipForceProfile:
    """Planned hand wrench over the maneuver, classified per motion phase.

    Straight phases push along the motion (start/cruise/brake); turning
    phases apply a tangential lateral force. Wrenches are expressed in the
    robot body frame (x forward toward the TSD).
    """
    if traj.duration <= 0.0:
        return ManipForceProfile(np.zeros(0), np.zeros((0, 3)))
    ts = np.arange(traj.times[0], traj.times[-1] + 1e-9, sample_dt)
    wrenches = np.zeros((len(ts), 3))
    eps = 1e-6
    for i, t in enumerate(ts):
        tw = traj.twist_at(t)
        tw_next = traj.twist_at(min(t + sample_dt, traj.times[-1]))
        if abs(tw.wz) > eps:
            f = table.turn(loaded)
            wrenches[i] = [0.0, math.copysign(f, tw.wz), 0.0]
        elif abs(tw.vx) > eps:
            speeding = abs(tw_next.vx) > abs(tw.vx) + eps
            braking = abs(tw_next.vx) < abs(tw.vx) - eps
            if speeding:
                f = table.start(loaded)
            elif braking:
                f = table.stop(loaded)
            else:
                f = table.cruise(loaded)
            wrenches[i] = [math.copysign(1.0, tw.vx) * f, 0.0, 0.0]
    return ManipForceProfile(ts, wrenches)


def manip_force_feedforward(profile: ManipForceProfile, t, mass: float, z_c: float,
                            g: float = 9.81, shift_limit: float = 0.08) -> np.ndarray:
    """ZMP-reference shift that quasi-statically balances the planned hand force.

    shift = -(z_c / (m g)) * planar force; clamped to the support margin.
    Accepts scalar or array times (for shifting a whole preview window).
    """
    w = profile.sample(t)
    force = w[..., :2]
    shift = -(z_c / (mass * g)) * force
    return np.clip(shift, -shift_limit, shift_limit)


@dataclass
class HandAdmittance:
    """Planar hand-position admittance with a grasp-slip watchdog.

    The offset rate is gain * (desired - measured); hitting the clamp for
    longer than `slip_after` seconds raises the slip-risk flag.
    """

    gain: float = 5e-4
    clamp: float = 0.08
    slip_after: float = 1.0

    def __post_init__(self):
        self._adm = Admittance(gain=self.gain, clamp=self.clamp, leak=0.0)
        self._saturated_for = 0.0
        self.slip_risk = False

    @property
    def offset(self) -> np.ndarray:
        return self._adm.offset.copy()

    def update(self, desired, measured, dt: float) -> np.ndarray:
        out = self._adm.update(desired, measured, dt)
        if self._adm.saturated():
            self._saturated_for += dt
        else:
            self._saturated_for = 0.0
        self.slip_risk = self._saturated_for > self.slip_after
        return out

    def reset(self) -> None:
        self._adm.offset[:] = 0.0
        self._saturated_for = 0.0
        self.slip_risk = False


@dataclass(frozen=True)
class RouteCorrection:
    waypoints: tuple
    delta: PlanarPose
    bed_estimate: PlanarPose
    applied: bool
    reason: str

    @property
    def magnitude(self) -> tuple[float, float]:
        return (math.hypot(self.delta.x, self.delta.y), abs(self.delta.yaw))


def apply_pose_correction(bed_in_robot: PlanarPose, track_time: float, converged: bool,
                          robot_world: PlanarPose, bed_nominal: PlanarPose,
                          remaining: list[Waypoint], now: float,
                          max_age: float = 0.5) -> RouteCorrection:
    """Re-express the remaining waypoints so their bed-relative poses match design.

    A stale or unconverged track skips the correction and keeps the route.
    The caller should adopt `bed_estimate` as the new nominal; doing so makes
    a repeated call with the same measurement a no-op.
    """
    if not converged:
        return RouteCorrection(tuple(remaining), PlanarPose(), bed_nominal, False,
                               "track not converged")
    age = now - track_time
    if age > max_age:
        return RouteCorrection(tuple(remaining), PlanarPose(), bed_nominal, False,
                               f"track stale by {age:.2f} s")
    bed_meas = robot_world.compose(bed_in_robot)
    delta = bed_meas.compose(bed_nominal.inverse())
    corrected = tuple(
        Waypoint(delta.compose(wp.pose), wp.transit_time, wp.motion_kind)
        for wp in remaining
    )
    return RouteCorrection(corrected, delta, bed_meas, True, "applied")
