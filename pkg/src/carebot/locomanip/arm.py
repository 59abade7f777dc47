"""Reduced planar 3-link arm used for grasp-reachability margin checks.

A top-view stand-in for the full arm: shoulder offset from the body origin,
three revolute joints, hand pose (position + approach heading) as the task.
Margins are the smallest distance of any joint to its range limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..spatial import PlanarPose, wrap_angle


class ArmReachError(RuntimeError):
    pass


@dataclass(frozen=True)
class PlanarArm:
    side: str  # "left" | "right"
    shoulder_offset: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.18]))
    link_lengths: tuple = (0.25, 0.25, 0.12)
    elbow_range: tuple = (0.05, 2.6)   # |q2| range: near-straight to folded
    shoulder_range: tuple = (-2.6, 2.6)
    wrist_range: tuple = (-1.8, 1.8)

    def __post_init__(self):
        off = np.asarray(self.shoulder_offset, dtype=float).copy()
        if self.side == "right":
            off = off * np.array([1.0, -1.0])
        object.__setattr__(self, "shoulder_offset", off)

    @property
    def elbow_sign(self) -> float:
        """Elbows point outward: left elbow bends negative, right positive."""
        return -1.0 if self.side == "left" else 1.0

    def ik(self, body: PlanarPose, hand_xy, hand_heading: float) -> np.ndarray:
        """Joint angles reaching the hand point with the given approach heading.

        Raises ArmReachError when the wrist target is outside the annulus of
        the first two links.
        """
        l1, l2, l3 = self.link_lengths
        shoulder = body.transform_point(self.shoulder_offset)
        wrist = np.asarray(hand_xy, dtype=float) - l3 * np.array(
            [math.cos(hand_heading), math.sin(hand_heading)])
        rel = wrist - shoulder
        d = float(np.linalg.norm(rel))
        if d > l1 + l2 - 1e-9 or d < abs(l1 - l2) + 1e-9:
            raise ArmReachError(
                f"wrist target at {d:.3f} m outside [{abs(l1 - l2):.3f}, {l1 + l2:.3f}]")
        cos_q2 = (d * d - l1 * l1 - l2 * l2) / (2 * l1 * l2)
        q2 = self.elbow_sign * math.acos(min(1.0, max(-1.0, cos_q2)))
        base = math.atan2(rel[1], rel[0])
        q1 = wrap_angle(base - math.atan2(l2 * math.sin(q2), l1 + l2 * math.cos(q2)) - body.yaw)
        q3 = wrap_angle(hand_heading - body.yaw - q1 - q2)
        return np.array([q1, q2, q3])

    def margin(self, body: PlanarPose, hand_xy, hand_heading: float) -> float:
        """Smallest joint-range margin (rad); -inf when out of reach."""
        try:
            q1, q2, q3 = self.ik(body, hand_xy, hand_heading)
        except ArmReachError:
            return -math.inf
        margins = [
            q1 - self.shoulder_range[0], self.shoulder_range[1] - q1,
            abs(q2) - self.elbow_range[0], self.elbow_range[1] - abs(q2),
            q3 - self.wrist_range[0], self.wrist_range[1] - q3,
        ]
        return float(min(margins))
