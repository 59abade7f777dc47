"""Closed-loop walking: preview reference generation plus DCM feedback.

The engine owns the footstep plan and the preview regulator's commanded
state; the physical pendulum lives in the simulator and is fed back in via
`tick`. Because the commanded state persists across command changes and
controller switches, the commanded CoM is continuous by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..spatial import PlanarPose, Twist, wrap_angle
from .control import dcm_feedback
from .footsteps import (
    FootGeometry,
    body_pose_of_step,
    in_double_support,
    replan_footsteps,
    standing_plan,
    support_polygon_at,
    zmp_reference_from_plan,
)
from .preview import PreviewController
from .types import FootstepPlan, GaitConfig, LipmParams, LipmState


@dataclass(frozen=True)
class EngineOutput:
    zmp_cmd: np.ndarray
    com_cmd: np.ndarray
    com_vel_cmd: np.ndarray
    dcm_ref: np.ndarray
    zmp_ref: np.ndarray
    support_polygon: np.ndarray
    double_support: bool
    saturated: bool
    body_pose: PlanarPose


class WalkingEngine:
    def __init__(self, params: LipmParams, gait: Optional[GaitConfig] = None,
                 foot_geom: Optional[FootGeometry] = None, k_dcm: float = 3.0,
                 body0: Optional[PlanarPose] = None, t0: float = 0.0):
        self.params = params
        self.gait = gait or GaitConfig()
        self.foot_geom = foot_geom or FootGeometry()
        self.k_dcm = k_dcm
        self.body0 = body0 or PlanarPose()
        self.plan: FootstepPlan = standing_plan(self.body0, self.gait, t0)
        self.preview = PreviewController(params)
        self.preview.reset_from(self.body0.xy, np.zeros(2), np.zeros(2))
        self.cmd = Twist()
        self.walking = False
        self.last_saturated = False
        # optional ZMP-reference shift, e.g. manipulation-force feed-forward
        self.zmp_shift_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
        self._plan_dirty = True
        self._next_liftoff = -np.inf
        self._zmp_ref = None

    def set_command(self, cmd: Twist) -> None:
        """Velocity command consumed at the next tick; starts stepping if needed."""
        if not self.walking or cmd != self.cmd:
            self._plan_dirty = True
        self.cmd = cmd
        self.walking = True

    def stand(self, now: float) -> None:
        """Drop back to a planted double stance at the current body pose."""
        self.walking = False
        self.plan = standing_plan(self.body_pose_at(now), self.gait, now)

    def body_pose_at(self, t: float) -> PlanarPose:
        """Body reference pose implied by the plan (yaw) and commanded CoM (xy)."""
        com = self.preview.commanded_com
        return PlanarPose(float(com[0]), float(com[1]), self._yaw_ref(t))

    def _yaw_ref(self, t: float) -> float:
        steps = self.plan.steps
        if len(steps) < 2:
            return self.body0.yaw
        times = np.array([s.touchdown_time for s in steps])
        yaws = np.unwrap([body_pose_of_step(s, self.gait.stance_width).yaw for s in steps])
        return wrap_angle(float(np.interp(t, times, yaws)))

    def tick(self, measured: LipmState, now: float) -> EngineOutput:
        dt = self.params.dt_ctrl
        # replanning is idempotent, so it only needs to run when the command
        # changed or another step committed (its swing began)
        if self.walking and (self._plan_dirty or now >= self._next_liftoff):
            result = replan_footsteps(self.cmd, self.plan, self.gait, now)
            self.plan = result.plan
            self.last_saturated = result.saturated
            self._plan_dirty = False
            future_liftoffs = [s.liftoff_time for s in self.plan.steps if s.liftoff_time > now]
            self._next_liftoff = min(future_liftoffs) if future_liftoffs else np.inf
            self._zmp_ref = zmp_reference_from_plan(self.plan, self.gait)

        window_times = now + dt * (1.0 + np.arange(self.preview.horizon_steps))
        if self.walking:
            window = self._zmp_ref.sample(window_times)
        else:
            window = np.tile(self._stance_mid(), (self.preview.horizon_steps, 1))
        if self.zmp_shift_fn is not None:
            window = window + self.zmp_shift_fn(window_times)

        com_cmd, vel_cmd, _ = self.preview.tick(window)
        dcm_ref = com_cmd + vel_cmd / self.params.omega
        zmp_ref_now = self.preview.commanded_zmp()
        poly = support_polygon_at(self.plan, now, self.foot_geom)
        zmp_cmd = dcm_feedback(measured, dcm_ref, zmp_ref_now, poly, self.k_dcm)
        return EngineOutput(
            zmp_cmd=zmp_cmd,
            com_cmd=com_cmd,
            com_vel_cmd=vel_cmd,
            dcm_ref=dcm_ref,
            zmp_ref=zmp_ref_now,
            support_polygon=poly,
            double_support=in_double_support(self.plan, now),
            saturated=self.last_saturated,
            body_pose=PlanarPose(float(com_cmd[0]), float(com_cmd[1]), self._yaw_ref(now)),
        )

    def _stance_mid(self) -> np.ndarray:
        feet = [s.pose.xy for s in self.plan.steps[-2:]]
        return 0.5 * (feet[0] + feet[1])

    def average_plan_velocity(self) -> Twist:
        """Mean body velocity implied by the future steps (for telemetry)."""
        future = [s for s in self.plan.steps if s.liftoff_time > 0]
        if len(future) < 2:
            return Twist()
        b0 = body_pose_of_step(future[0], self.gait.stance_width)
        b1 = body_pose_of_step(future[-1], self.gait.stance_width)
        dt_plan = future[-1].touchdown_time - future[0].touchdown_time
        if dt_plan <= 0:
            return Twist()
        rel = b0.inverse().compose(b1)
        return Twist(rel.x / dt_plan, rel.y / dt_plan, rel.yaw / dt_plan)
