"""Controllers sharing one walking engine and one task solver.

The engine (and with it the preview regulator's commanded state) lives in
the shared state, so activating a different controller changes where the
twist command comes from, never the commanded CoM itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lipm import LipmState, WalkingEngine
from .lipm.engine import EngineOutput
from .locomanip import HandAdmittance, ManipForceProfile, TsdTrajectory, manip_force_feedforward
from .modes import PolygonConstraint, Statechart, Task, TaskSet
from .spatial import PlanarPose, Twist, wrap_angle
from .teleop.mapping import HapticState
from .teleop.session import SessionState


@dataclass
class TrackSnapshot:
    """Latest-value mailbox entry from the perception loop."""

    bed_in_robot: PlanarPose
    timestamp: float
    converged: bool


@dataclass
class ManeuverState:
    """Active TSD leg: trajectory, force profile, and start time."""

    traj: TsdTrajectory
    profile: Optional[ManipForceProfile]
    started_at: float
    offset: PlanarPose  # robot body behind the cart (TSD frame)
    loaded: bool = False

    def elapsed(self, now: float) -> float:
        return now - self.started_at

    def done(self, now: float) -> bool:
        return self.elapsed(now) >= self.traj.duration


@dataclass
class SharedState:
    """Everything controllers may read or steer; single writer per tick."""

    engine: WalkingEngine
    measured: LipmState
    robot_mass: float = 54.0
    now: float = 0.0
    maneuver: Optional[ManeuverState] = None
    track: Optional[TrackSnapshot] = None
    hand_admittance: HandAdmittance = field(default_factory=HandAdmittance)
    measured_hand_force: np.ndarray = field(default_factory=lambda: np.zeros(2))
    desired_hand_force: np.ndarray = field(default_factory=lambda: np.zeros(2))
    grasping: bool = False
    session: SessionState = field(default_factory=SessionState)
    haptic_left: HapticState = field(default_factory=HapticState)
    haptic_right: HapticState = field(default_factory=HapticState)
    goal_pose: Optional[PlanarPose] = None
    feedforward_enabled: bool = True
    events: list = field(default_factory=list)

    def log_event(self, kind: str, detail: str) -> None:
        self.events.append((self.now, kind, detail))


class _EngineController:
    """Common behavior: run the engine and express its output as tasks.

    Commands pass through a cap, a slew limiter, and a DCM governor: when
    the measured capture point lags the commanded one, the reference slows
    down rather than racing beyond the feedback's support-polygon authority.
    """

    controller_id = "base"
    TWIST_CAP = Twist(0.28, 0.15, 0.35)
    SLEW = 0.5          # per-second change of each twist component
    GOVERNOR_START = 0.02  # dcm error where slowing begins (m)
    GOVERNOR_STOP = 0.08   # dcm error where the reference freezes (m)

    def __init__(self, shared_statechart: Optional[Statechart] = None):
        self.statechart = shared_statechart
        self.last_output: Optional[EngineOutput] = None
        self._last_cmd = Twist()
        self._last_time: Optional[float] = None

    def on_activate(self, shared: SharedState, now: float) -> None:
        # initialize FROM the live shared state: nothing to reset, the
        # engine's commanded state is the continuity carrier
        shared.log_event("controller", f"{self.controller_id} active")

    def on_deactivate(self, shared: SharedState, now: float) -> None:
        shared.log_event("controller", f"{self.controller_id} inactive")

    def interruptible(self, shared: SharedState, now: float) -> bool:
        out = self.last_output
        return out.double_support if out is not None else True

    def desired_twist(self, shared: SharedState, now: float) -> Twist:
        raise NotImplementedError

    def _shape_command(self, cmd: Twist, shared: SharedState, now: float) -> Twist:
        cap = self.TWIST_CAP
        vx = min(max(cmd.vx, -cap.vx), cap.vx)
        vy = min(max(cmd.vy, -cap.vy), cap.vy)
        wz = min(max(cmd.wz, -cap.wz), cap.wz)
        dcm_err = float(np.linalg.norm(
            shared.measured.dcm - shared.engine.preview.commanded_dcm()))
        span = self.GOVERNOR_STOP - self.GOVERNOR_START
        g = min(1.0, max(0.0, 1.0 - (dcm_err - self.GOVERNOR_START) / span))
        vx, vy, wz = g * vx, g * vy, g * wz
        dt = (now - self._last_time) if self._last_time is not None else 0.0
        self._last_time = now
        if dt > 0:
            step = self.SLEW * dt
            vx = self._last_cmd.vx + min(step, max(-step, vx - self._last_cmd.vx))
            vy = self._last_cmd.vy + min(step, max(-step, vy - self._last_cmd.vy))
            wz = self._last_cmd.wz + min(step, max(-step, wz - self._last_cmd.wz))
        shaped = Twist(vx, vy, wz)
        self._last_cmd = shaped
        return shaped

    def update(self, shared: SharedState, now: float):
        if self.statechart is not None:
            self.statechart.step(shared, now)
        cmd = self._shape_command(self.desired_twist(shared, now), shared, now)
        engine = shared.engine
        if cmd.is_zero() and not engine.walking:
            pass  # keep standing
        else:
            engine.set_command(cmd)
        out = engine.tick(shared.measured, now)
        self.last_output = out
        tasks = TaskSet([Task("com_tracking", out.com_cmd, weight=1.0)])
        constraints = [PolygonConstraint("support", out.support_polygon)]
        return tasks, constraints


class TeleopController(_EngineController):
    """Operator twist with the safety watchdog; haptics ride on hand forces."""

    controller_id = "teleop"

    def desired_twist(self, shared: SharedState, now: float) -> Twist:
        return shared.session.effective_twist(now)


class AutonomousController(_EngineController):
    """Scenario-driven behavior: TSD maneuvering and go-to-pose legs."""

    controller_id = "autonomous"

    def __init__(self, statechart: Optional[Statechart] = None,
                 lookahead: float = 1.1, k_lin: float = 1.5, k_yaw: float = 1.8):
        super().__init__(statechart)
        self.lookahead = lookahead
        self.k_lin = k_lin
        self.k_yaw = k_yaw

    def desired_twist(self, shared: SharedState, now: float) -> Twist:
        if shared.maneuver is not None:
            return self._maneuver_twist(shared, now)
        if shared.goal_pose is not None:
            return self._goto_twist(shared, now)
        return Twist()

    def _reference_body(self, shared: SharedState, t_leg: float) -> PlanarPose:
        man = shared.maneuver
        tsd_body = man.traj.body_pose_at(min(t_leg, man.traj.duration))
        return tsd_body.compose(man.offset)

    def _maneuver_twist(self, shared: SharedState, now: float) -> Twist:
        man = shared.maneuver
        t_leg = man.elapsed(now)
        ref = self._reference_body(shared, t_leg + self.lookahead)
        # feedforward is the BODY reference velocity: orbiting the cart's
        # rotation center during turns needs a lateral component the cart
        # twist alone does not carry
        h = 0.1
        ref_next = self._reference_body(shared, t_leg + self.lookahead + h)
        rel = ref.inverse().compose(ref_next)
        ff = Twist(rel.x / h, rel.y / h, rel.yaw / h)
        return self._track_pose(shared, ref, ff)

    def _goto_twist(self, shared: SharedState, now: float) -> Twist:
        return self._track_pose(shared, shared.goal_pose, Twist())

    def _track_pose(self, shared: SharedState, ref: PlanarPose, ff: Twist) -> Twist:
        body = shared.engine.body_pose_at(shared.now)
        err_w = np.array([ref.x - body.x, ref.y - body.y])
        c, s = math.cos(body.yaw), math.sin(body.yaw)
        ex = c * err_w[0] + s * err_w[1]
        ey = -s * err_w[0] + c * err_w[1]
        eyaw = wrap_angle(ref.yaw - body.yaw)
        return Twist(
            ff.vx + self.k_lin * ex,
            self.k_lin * ey,
            ff.wz + self.k_yaw * eyaw,
        )

    def zmp_shift(self, shared: SharedState, times: np.ndarray) -> np.ndarray:
        """Manipulation-force feed-forward over a preview window."""
        man = shared.maneuver
        if man is None or man.profile is None or not shared.feedforward_enabled:
            return np.zeros((len(times), 2))
        params = shared.engine.params
        rel = times - man.started_at
        shift_body = manip_force_feedforward(man.profile, rel, shared.robot_mass,
                                             params.z_c)
        yaw = shared.engine.body_pose_at(shared.now).yaw
        c, s = math.cos(yaw), math.sin(yaw)
        R = np.array([[c, -s], [s, c]])
        return shift_body @ R.T
