"""Frame-aware rigid-body math shared by every other module.

Poses carry explicit parent/child frame ids; composing poses whose frames
do not line up is a hard error rather than a silent wrong answer.
Rotations are stored as unit quaternions (w, x, y, z) and re-normalized
after every composition so long control loops do not drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WORLD = "world"


class FrameMismatchError(ValueError):
    """Raised when a pose composition chain's frames do not line up."""


def _wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        raise ValueError("cannot normalize near-zero quaternion")
    q = q / n
    # canonical sign keeps serialized poses reproducible
    if q[0] < 0.0:
        q = -q
    return q


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ]
    )


def quat_from_matrix(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    trace = R[0, 0] + R[1, 1] + R[2, 2]
    if trace > 0.0:
        s = math.sqrt(trace + 1.0) * 2.0
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif R[1, 1] > R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    return quat_normalize(np.array(q))


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = float(np.linalg.norm(axis))
    if n < 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = 0.5 * angle
    return quat_normalize(np.concatenate([[math.cos(half)], math.sin(half) * axis / n]))


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector(s) v by quaternion q. v may be (3,) or (N, 3)."""
    R = quat_to_matrix(q)
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        return R @ v
    return v @ R.T


@dataclass(frozen=True)
class Pose3:
    """Rigid transform mapping child-frame coordinates into the parent frame."""

    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    parent_frame: str = WORLD
    child_frame: str = WORLD

    def __post_init__(self):
        object.__setattr__(self, "rotation", quat_normalize(np.asarray(self.rotation, dtype=float)))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).copy())
        if self.translation.shape != (3,):
            raise ValueError("translation must be a 3-vector")
        if not np.all(np.isfinite(self.translation)):
            raise ValueError("translation must be finite")

    @staticmethod
    def identity(frame: str = WORLD) -> "Pose3":
        return Pose3(parent_frame=frame, child_frame=frame)

    @staticmethod
    def from_axis_angle(axis, angle: float, translation=(0.0, 0.0, 0.0),
                        parent_frame: str = WORLD, child_frame: str = WORLD) -> "Pose3":
        return Pose3(quat_from_axis_angle(np.asarray(axis, dtype=float), angle),
                     np.asarray(translation, dtype=float), parent_frame, child_frame)

    @property
    def matrix(self) -> np.ndarray:
        """4x4 homogeneous transform."""
        T = np.eye(4)
        T[:3, :3] = quat_to_matrix(self.rotation)
        T[:3, 3] = self.translation
        return T

    def compose(self, other: "Pose3") -> "Pose3":
        """Chain self (A<-B) with other (B<-C), yielding A<-C."""
        if self.child_frame != other.parent_frame:
            raise FrameMismatchError(
                f"cannot compose: child frame {self.child_frame!r} != parent frame {other.parent_frame!r}"
            )
        q = quat_normalize(quat_multiply(self.rotation, other.rotation))
        t = self.translation + quat_rotate(self.rotation, other.translation)
        return Pose3(q, t, self.parent_frame, other.child_frame)

    def __matmul__(self, other: "Pose3") -> "Pose3":
        return self.compose(other)

    def inverse(self) -> "Pose3":
        qi = quat_conjugate(self.rotation)
        ti = -quat_rotate(qi, self.translation)
        return Pose3(qi, ti, self.child_frame, self.parent_frame)

    def transform_point(self, pt) -> np.ndarray:
        """Express point(s) given in the child frame in the parent frame."""
        return quat_rotate(self.rotation, pt) + self.translation

    def rotate_vector(self, v) -> np.ndarray:
        return quat_rotate(self.rotation, v)

    def almost_equal(self, other: "Pose3", tol: float = 1e-9) -> bool:
        dq = min(
            float(np.linalg.norm(self.rotation - other.rotation)),
            float(np.linalg.norm(self.rotation + other.rotation)),
        )
        return dq < tol and float(np.linalg.norm(self.translation - other.translation)) < tol

    def rotation_angle_to(self, other: "Pose3") -> float:
        """Geodesic rotation angle between the two orientations (rad)."""
        dot = abs(float(np.dot(self.rotation, other.rotation)))
        return 2.0 * math.acos(min(1.0, dot))

    def serialize(self) -> str:
        """Log form: 7 numbers, qw qx qy qz tx ty tz."""
        vals = list(self.rotation) + list(self.translation)
        return " ".join(f"{v:.9g}" for v in vals)

    @staticmethod
    def deserialize(text: str, parent_frame: str = WORLD, child_frame: str = WORLD) -> "Pose3":
        vals = [float(tok) for tok in text.split()]
        if len(vals) != 7:
            raise ValueError(f"expected 7 numbers, got {len(vals)}")
        return Pose3(np.array(vals[:4]), np.array(vals[4:]), parent_frame, child_frame)


@dataclass(frozen=True)
class PlanarPose:
    """Ground-plane pose: x, y in meters, yaw wrapped to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "yaw", _wrap_angle(float(self.yaw)))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def to_pose3(self, parent_frame: str = WORLD, child_frame: str = WORLD) -> Pose3:
        return Pose3.from_axis_angle((0.0, 0.0, 1.0), self.yaw, (self.x, self.y, 0.0),
                                     parent_frame, child_frame)

    @staticmethod
    def from_pose3(p: Pose3) -> "PlanarPose":
        R = quat_to_matrix(p.rotation)
        yaw = math.atan2(R[1, 0], R[0, 0])
        return PlanarPose(float(p.translation[0]), float(p.translation[1]), yaw)

    def compose(self, other: "PlanarPose") -> "PlanarPose":
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return PlanarPose(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.yaw + other.yaw,
        )

    def inverse(self) -> "PlanarPose":
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return PlanarPose(-(c * self.x + s * self.y), -(-s * self.x + c * self.y), -self.yaw)

    def transform_point(self, pt) -> np.ndarray:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        pt = np.asarray(pt, dtype=float)
        return np.array([self.x + c * pt[0] - s * pt[1], self.y + s * pt[0] + c * pt[1]])

    def distance_to(self, other: "PlanarPose") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def yaw_to(self, other: "PlanarPose") -> float:
        return abs(_wrap_angle(self.yaw - other.yaw))


@dataclass(frozen=True)
class Twist:
    """Planar velocity command: vx, vy in m/s, wz in rad/s."""

    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.vx, self.vy, self.wz)):
            raise ValueError("twist components must be finite")

    @property
    def linear(self) -> np.ndarray:
        return np.array([self.vx, self.vy])

    def norm(self) -> float:
        return math.hypot(self.vx, self.vy)

    def is_zero(self, tol: float = 1e-12) -> bool:
        return abs(self.vx) < tol and abs(self.vy) < tol and abs(self.wz) < tol


def wrap_angle(a: float) -> float:
    return _wrap_angle(a)
