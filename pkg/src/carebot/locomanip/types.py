"""Types for maneuvering the transfer support device (TSD) with both hands."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..spatial import PlanarPose, Pose3, Twist

TSD_MAX_LOAD_KG = 100.0


class MotionKind(enum.Enum):
    STRAIGHT = "straight"
    TURN = "turn"


@dataclass(frozen=True)
class TsdState:
    """Planar state of the castered transfer cart."""

    pose: PlanarPose
    velocity: Twist = field(default_factory=Twist)
    loaded: bool = False
    load_mass: float = 0.0
    rotation_center: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        object.__setattr__(self, "rotation_center",
                           np.asarray(self.rotation_center, dtype=float).copy())
        if not (0.0 <= self.load_mass <= TSD_MAX_LOAD_KG):
            raise ValueError(f"load_mass must be in [0, {TSD_MAX_LOAD_KG}] kg")
        if self.loaded and self.load_mass <= 0.0:
            raise ValueError("loaded cart must carry positive load mass")


@dataclass(frozen=True)
class Waypoint:
    """Route node for the steering frame (rotation-center point + heading)."""

    pose: PlanarPose
    transit_time: float
    motion_kind: MotionKind


@dataclass(frozen=True)
class TrapezoidalProfile:
    """Scalar velocity-trapezoid covering `total_distance` (signed).

    Degenerates to a triangle when the distance is too short to reach
    cruise speed.
    """

    total_distance: float
    cruise_speed: float
    accel: float

    def __post_init__(self):
        if self.accel <= 0 or self.cruise_speed <= 0:
            raise ValueError("speed and acceleration must be positive")

    @staticmethod
    def from_limits(distance: float, v_max: float, a_max: float) -> "TrapezoidalProfile":
        """Minimum-time profile within the given limits."""
        d = abs(distance)
        if d < v_max * v_max / a_max:
            v = math.sqrt(d * a_max)  # triangular
            v = max(v, 1e-12)
            return TrapezoidalProfile(distance, v, a_max)
        return TrapezoidalProfile(distance, v_max, a_max)

    @staticmethod
    def for_duration(distance: float, duration: float, v_max: float,
                     a_max: float) -> "TrapezoidalProfile":
        """Profile meeting an exact duration by lowering the cruise speed.

        Raises if the duration is shorter than the minimum-time profile or
        the implied cruise speed exceeds v_max.
        """
        d = abs(distance)
        if d < 1e-12:
            return TrapezoidalProfile(distance, max(v_max, 1e-9), a_max)
        disc = duration * duration - 4.0 * d / a_max
        if disc < 0:
            raise ValueError(f"duration {duration:.3f}s too short for distance {d:.3f}")
        v = 0.5 * a_max * (duration - math.sqrt(disc))
        if v > v_max * (1.0 + 1e-9):
            raise ValueError(f"required cruise speed {v:.3f} exceeds limit {v_max:.3f}")
        return TrapezoidalProfile(distance, min(v, v_max), a_max)

    @property
    def t_accel(self) -> float:
        return self.cruise_speed / self.accel

    @property
    def t_cruise(self) -> float:
        d_ramp = self.cruise_speed * self.t_accel  # both ramps together
        return max(0.0, (abs(self.total_distance) - d_ramp) / self.cruise_speed)

    @property
    def duration(self) -> float:
        return 2.0 * self.t_accel + self.t_cruise

    @property
    def sign(self) -> float:
        return -1.0 if self.total_distance < 0 else 1.0

    def sample(self, t: float) -> tuple[float, float, float]:
        """(position, velocity, acceleration) at time t, clamped to the ends."""
        if abs(self.total_distance) < 1e-12:
            return 0.0, 0.0, 0.0
        ta, tc, v, a = self.t_accel, self.t_cruise, self.cruise_speed, self.accel
        if t <= 0.0:
            s, sv, sa = 0.0, 0.0, a
        elif t < ta:
            s, sv, sa = 0.5 * a * t * t, a * t, a
        elif t < ta + tc:
            s, sv, sa = 0.5 * a * ta * ta + v * (t - ta), v, 0.0
        elif t < 2 * ta + tc:
            td = t - ta - tc
            s = 0.5 * a * ta * ta + v * tc + v * td - 0.5 * a * td * td
            sv, sa = v - a * td, -a
        else:
            s, sv, sa = abs(self.total_distance), 0.0, 0.0
        return self.sign * s, self.sign * sv, self.sign * sa


@dataclass(frozen=True)
class TsdTrajectory:
    """Timed TSD motion: steering-frame poses plus body-frame twists."""

    times: np.ndarray
    poses: np.ndarray  # (N, 3): x, y, yaw of the steering frame
    twists: np.ndarray  # (N, 3): vx, 0, wz in the body frame
    rotation_center: np.ndarray  # body-frame offset of the steering point

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0]) if len(self.times) else 0.0

    def pose_at(self, t: float) -> PlanarPose:
        if len(self.times) == 0:
            raise ValueError("empty trajectory")
        x = np.interp(t, self.times, self.poses[:, 0])
        y = np.interp(t, self.times, self.poses[:, 1])
        yaw = np.interp(t, self.times, np.unwrap(self.poses[:, 2]))
        return PlanarPose(float(x), float(y), float(yaw))

    def body_pose_at(self, t: float) -> PlanarPose:
        """TSD body origin (the steering point minus the body-frame offset)."""
        steer = self.pose_at(t)
        rc = self.rotation_center
        return steer.compose(PlanarPose(-rc[0], -rc[1], 0.0))

    def twist_at(self, t: float) -> Twist:
        vx = np.interp(t, self.times, self.twists[:, 0])
        wz = np.interp(t, self.times, self.twists[:, 2])
        return Twist(float(vx), 0.0, float(wz))


@dataclass(frozen=True)
class GraspConfig:
    """Hand placements on the TSD handrail, fixed for a whole maneuver."""

    left_hand: Pose3   # TSD frame
    right_hand: Pose3  # TSD frame
    joint_margin: float = 0.15  # rad, required distance to arm joint limits

    @staticmethod
    def default(rail_x: float = -0.25, rail_halfwidth: float = 0.22,
                rail_z: float = 0.95) -> "GraspConfig":
        left = Pose3(translation=(rail_x, rail_halfwidth, rail_z),
                     parent_frame="tsd", child_frame="hand_left")
        right = Pose3(translation=(rail_x, -rail_halfwidth, rail_z),
                      parent_frame="tsd", child_frame="hand_right")
        return GraspConfig(left, right)

    def planar_targets(self) -> dict:
        """Top-view hand points in the TSD frame."""
        return {
            "left": np.array([self.left_hand.translation[0], self.left_hand.translation[1]]),
            "right": np.array([self.right_hand.translation[0], self.right_hand.translation[1]]),
        }


@dataclass(frozen=True)
class PhaseForceTable:
    """Hand-force magnitudes measured in advance, per maneuver phase (N).

    Each entry is (unloaded, loaded); stop entries brake against the motion.
    """

    start_force: tuple = (10.0, 30.0)
    cruise_force: tuple = (6.0, 22.0)
    turn_force: tuple = (8.0, 20.0)
    stop_force: tuple = (-8.0, -26.0)

    def start(self, loaded: bool) -> float:
        return self.start_force[1 if loaded else 0]

    def cruise(self, loaded: bool) -> float:
        return self.cruise_force[1 if loaded else 0]

    def turn(self, loaded: bool) -> float:
        return self.turn_force[1 if loaded else 0]

    def stop(self, loaded: bool) -> float:
        return self.stop_force[1 if loaded else 0]


@dataclass(frozen=True)
class ManipForceProfile:
    """Time-stamped planar hand wrench (fx, fy, tau) the robot plans to apply."""

    times: np.ndarray
    wrenches: np.ndarray  # (N, 3), world-frame-free: expressed in the robot body frame

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        w = np.asarray(self.wrenches, dtype=float).reshape(-1, 3)
        if len(t) != len(w):
            raise ValueError("times and wrenches must be equally long")
        if not np.all(np.isfinite(w)):
            raise ValueError("wrench profile must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "wrenches", w)

    def sample(self, t) -> np.ndarray:
        """Zero outside the maneuver interval, linear inside."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((len(ts), 3))
        if len(self.times):
            inside = (ts >= self.times[0]) & (ts <= self.times[-1])
            for k in range(3):
                out[inside, k] = np.interp(ts[inside], self.times, self.wrenches[:, k])
        return out[0] if scalar else out
