"""Operator input mappings: sticks to twist, trigger to gripper, wrench to haptics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..spatial import Twist

DEADZONE = 0.1


@dataclass(frozen=True)
class StickLimits:
    vx_max: float = 0.25
    vy_max: float = 0.10
    wz_max: float = 0.30


def _deadzone(v: float) -> float:
    if abs(v) < DEADZONE:
        return 0.0
    # rescale so the output is continuous at the deadzone edge
    return math.copysign((abs(v) - DEADZONE) / (1.0 - DEADZONE), v)


def velocity_from_sticks(left_stick, right_stick_x: float, limits: StickLimits) -> Twist:
    """Left stick translates (forward/backward, sidestepping), right rotates.

    Both sticks together produce an arc. Stick y is forward (+1 = full
    forward), stick x is rightward, so vy and wz take minus signs.
    """
    lx = min(1.0, max(-1.0, float(left_stick[0])))
    ly = min(1.0, max(-1.0, float(left_stick[1])))
    rx = min(1.0, max(-1.0, float(right_stick_x)))
    return Twist(
        vx=_deadzone(ly) * limits.vx_max,
        vy=-_deadzone(lx) * limits.vy_max,
        wz=-_deadzone(rx) * limits.wz_max,
    )


class GripperRateLimiter:
    """Monotone trigger-to-closure map with a closing speed cap."""

    def __init__(self, max_rate: float = 2.0):
        self.max_rate = max_rate
        self.closure = 0.0

    def update(self, pressure: float, dt: float) -> float:
        target = min(1.0, max(0.0, pressure))
        step = self.max_rate * dt
        self.closure += min(step, max(-step, target - self.closure))
        return self.closure


def gripper_from_trigger(pressure: float) -> float:
    """Instantaneous closure command: 0 fully open, 1 fully closed."""
    return min(1.0, max(0.0, float(pressure)))


@dataclass
class HapticState:
    """Hysteresis band around the contact threshold prevents chatter."""

    threshold: float = 2.0
    scale: float = 20.0
    hysteresis: float = 0.5
    active: bool = False


def haptic_from_wrench(state: HapticState, force, side: str):
    """HapticPulse when the wrist force norm crosses the threshold upward."""
    from .protocol import HapticPulse

    f = float(np.linalg.norm(np.asarray(force, dtype=float)))
    if not math.isfinite(f):
        raise ValueError("wrench must be finite")
    if state.active:
        if f < state.threshold - state.hysteresis:
            state.active = False
        return None
    if f > state.threshold:
        state.active = True
        intensity = min(1.0, max(0.0, (f - state.threshold) / state.scale))
        return HapticPulse(side, intensity)
    return None
