"""Two-step ladder fixture with a handrail: the multi-contact test scene."""

from __future__ import annotations

import numpy as np

from ..geometry import rectangle
from ..spatial import Pose3
from .contacts import ContactMode, ContactSpec, ContactSequence, Stance

FOOT_POLY = rectangle(0.0, 0.0, 0.20, 0.09)
HAND_POLY = rectangle(0.0, 0.0, 0.10, 0.08)

STEP_RISE = 0.25
STEP_RUN = 0.30
RAIL_HEIGHT = 0.90
RAIL_X = 0.55


def _flat(limb: str, x: float, y: float, z: float, mu: float = 0.6,
          mode: ContactMode = ContactMode.UNILATERAL, poly=None) -> ContactSpec:
    pose = Pose3(translation=(x, y, z), parent_frame="world", child_frame=f"c_{limb}")
    return ContactSpec(limb, pose, FOOT_POLY if poly is None else poly, mu, mode)


def rail_grasp(x: float = RAIL_X, y: float = 0.0, z: float = RAIL_HEIGHT,
               mu: float = 0.8, max_force: float = 200.0) -> ContactSpec:
    pose = Pose3(translation=(x, y, z), parent_frame="world", child_frame="c_hand")
    return ContactSpec("hand", pose, HAND_POLY, mu, ContactMode.BILATERAL, max_force)


def ladder_scene() -> dict:
    """Surface heights by name, for building stances and plots."""
    return {
        "ground": 0.0,
        "step1": STEP_RISE,
        "step2": 2 * STEP_RISE,
        "rail": RAIL_HEIGHT,
        "step1_x": STEP_RUN,
        "step2_x": 2 * STEP_RUN,
    }


def climb_sequence(stance_width: float = 0.16) -> ContactSequence:
    """Climb from the ground onto the second step, rail grasped throughout.

    Feet alternate one limb per transition; the hand is placed first and
    released last so every foot swing keeps three contacts.
    """
    yl, yr = stance_width / 2, -stance_width / 2
    g, s1, s2 = 0.0, STEP_RISE, 2 * STEP_RISE
    x1, x2 = STEP_RUN, 2 * STEP_RUN
    hand = rail_grasp()

    def feet(xl, zl, xr, zr):
        return (_flat("foot_left", xl, yl, zl), _flat("foot_right", xr, yr, zr))

    stances = [
        Stance(feet(0.0, g, 0.0, g), name="stand"),
        Stance(feet(0.0, g, 0.0, g) + (hand,), name="grasp rail"),
        Stance(feet(x1, s1, 0.0, g) + (hand,), name="left to step1"),
        Stance(feet(x1, s1, x1, s1) + (hand,), name="right to step1"),
        Stance(feet(x2, s2, x1, s1) + (hand,), name="left to step2"),
        Stance(feet(x2, s2, x2, s2) + (hand,), name="right to step2"),
    ]
    return ContactSequence(tuple(stances))
