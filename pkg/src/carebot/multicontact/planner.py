"""Quasi-static transition planning on a reduced planar (sagittal) model.

One limb moves per transition. The CoM rides a three-phase path: shift into
the shared-support feasible region, hold while the limb swings along a
clearance arc, then settle for the new stance. Joints come from analytic
two-link IK per limb; every frame is checked for static equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .contacts import Stance, n_limb_changes
from .equilibrium import check_static_equilibrium, com_x_interval


class TransitionError(RuntimeError):
    def __init__(self, frame: int, message: str):
        super().__init__(f"frame {frame}: {message}")
        self.frame = frame


@dataclass(frozen=True)
class PlanarModel:
    """Sagittal 5-link reduced model: two 2-link legs, torso, one 2-link arm."""

    mass: float = 54.0
    leg_lengths: tuple = (0.45, 0.45)
    arm_lengths: tuple = (0.34, 0.34)
    hip_below_com: float = 0.12
    shoulder_above_hip: float = 0.38
    knee_range: tuple = (0.08, 2.6)
    elbow_range: tuple = (0.0, 2.7)

    def hip(self, com: np.ndarray) -> np.ndarray:
        return com - np.array([0.0, self.hip_below_com])

    def shoulder(self, com: np.ndarray) -> np.ndarray:
        return self.hip(com) + np.array([0.0, self.shoulder_above_hip])

    def limb_ik(self, root: np.ndarray, tip: np.ndarray, lengths,
                joint_range, bend_sign: float) -> np.ndarray:
        """(root pitch, bend) angles of a planar 2-link chain in the x-z plane."""
        l1, l2 = lengths
        rel = tip - root
        d = float(np.linalg.norm(rel))
        if d > l1 + l2 - 1e-9 or d < abs(l1 - l2) + 1e-9:
            raise ValueError(f"limb target at {d:.3f} m unreachable for links {lengths}")
        cos_bend = (d * d - l1 * l1 - l2 * l2) / (2 * l1 * l2)
        bend = bend_sign * math.acos(min(1.0, max(-1.0, cos_bend)))
        if not (joint_range[0] <= abs(bend) <= joint_range[1]):
            raise ValueError(f"bend angle {bend:.2f} outside range {joint_range}")
        base = math.atan2(rel[1], rel[0])
        root_pitch = base - math.atan2(l2 * math.sin(bend), l1 + l2 * math.cos(bend))
        return np.array([root_pitch, bend])


@dataclass(frozen=True)
class TransitionFrame:
    com: np.ndarray            # (2,) x, z in the sagittal plane
    joints: dict               # limb -> (root angle, bend angle)
    limb_tips: dict            # limb -> (2,) x, z
    active_limbs: tuple
    feasible: bool


@dataclass(frozen=True)
class TransitionPlan:
    frames: tuple
    moving_limb: str

    def com_path(self) -> np.ndarray:
        return np.array([f.com for f in self.frames])


def _sagittal_point(contact) -> np.ndarray:
    p = contact.surface_pose.translation
    return np.array([p[0], p[2]])


def _com_height(stance: Stance, model: PlanarModel) -> float:
    z = float(np.mean([c.surface_pose.translation[2] for c in stance.contacts
                       if c.limb.startswith("foot")]))
    return z + 0.78


def _feasible_com_x(stance: Stance, model: PlanarModel, margin: float = 0.01):
    interval = com_x_interval(stance, model.mass)
    if interval is None:
        return None
    lo = max(interval[0], float(stance.com_box[0, 0]))
    hi = min(interval[1], float(stance.com_box[1, 0]))
    if hi - lo < 2 * margin:
        return (0.5 * (lo + hi), 0.5 * (lo + hi))
    return (lo + margin, hi - margin)


def _clearance_arc(p0: np.ndarray, p1: np.ndarray, s: float, clearance: float) -> np.ndarray:
    flat = p0 + s * (p1 - p0)
    flat[1] += clearance * math.sin(math.pi * s)
    return flat


def plan_transition(from_stance: Stance, to_stance: Stance, model: PlanarModel,
                    n_frames: int = 50, clearance: float = 0.06,
                    hold_fraction: float = 0.25) -> TransitionPlan:
    """Discretized whole-body motion moving exactly one limb between stances.

    Raises TransitionError with the offending frame index when IK fails or a
    frame loses static equilibrium.
    """
    if n_limb_changes(from_stance, to_stance) == 0:
        ix = _feasible_com_x(from_stance, model)
        if ix is None:
            raise TransitionError(0, "stance has an empty feasible CoM region")
        com = np.array([_mid(ix), _com_height(from_stance, model)])
        return TransitionPlan((_solve_frame(from_stance, model, com, {}, 0),), "")
    if n_limb_changes(from_stance, to_stance) != 1:
        raise ValueError("stances must differ in exactly one limb")

    moving = _moving_limb(from_stance, to_stance)
    shared = Stance(tuple(c for c in from_stance.contacts if c.limb != moving),
                    name="shared")

    ix_from = _feasible_com_x(from_stance, model)
    ix_shared = _feasible_com_x(shared, model)
    ix_to = _feasible_com_x(to_stance, model)
    for name, ix in (("from", ix_from), ("shared", ix_shared), ("to", ix_to)):
        if ix is None:
            raise TransitionError(0, f"{name} stance has an empty feasible CoM region")

    x_start = _mid(ix_from)
    x_hold = _clamp(_mid(ix_shared), *ix_shared)
    x_end = _mid(ix_to)

    c_from = from_stance.contact_of(moving)
    c_to = to_stance.contact_of(moving)
    p_from = _sagittal_point(c_from) if c_from else None
    p_to = _sagittal_point(c_to) if c_to else None

    n1 = max(2, int(round(hold_fraction * n_frames)))
    n3 = max(2, int(round(hold_fraction * n_frames)))
    n2 = n_frames - n1 - n3
    frames = []
    idx = 0
    z_from = _com_height(from_stance, model)
    z_to = _com_height(to_stance, model)

    for k in range(n1):
        s = k / max(1, n1 - 1)
        com = np.array([x_start + s * (x_hold - x_start), z_from])
        frames.append(_solve_frame(from_stance, model, com, {}, idx))
        idx += 1
    for k in range(n2):
        s = (k + 1) / (n2 + 1)
        overrides = {}
        if p_from is not None and p_to is not None:
            overrides[moving] = _clearance_arc(p_from.copy(), p_to, s, clearance)
        elif p_to is not None:  # limb arriving from free space
            overrides[moving] = None
        com = np.array([x_hold, z_from + s * (z_to - z_from)])
        frames.append(_solve_frame(shared, model, com, overrides, idx))
        idx += 1
    for k in range(n3):
        s = k / max(1, n3 - 1)
        com = np.array([x_hold + s * (x_end - x_hold), z_to])
        frames.append(_solve_frame(to_stance, model, com, {}, idx))
        idx += 1
    return TransitionPlan(tuple(frames), moving)


def _mid(interval) -> float:
    return 0.5 * (interval[0] + interval[1])


def _clamp(x, lo, hi) -> float:
    return min(max(x, lo), hi)


def _moving_limb(a: Stance, b: Stance) -> str:
    changed = a.limbs() ^ b.limbs()
    if changed:
        return changed.pop()
    for limb in a.limbs():
        ca, cb = a.contact_of(limb), b.contact_of(limb)
        if not np.allclose(ca.surface_pose.translation, cb.surface_pose.translation):
            return limb
    raise ValueError("no moving limb found")


def _solve_frame(stance: Stance, model: PlanarModel, com: np.ndarray,
                 tip_overrides: dict, idx: int) -> TransitionFrame:
    """IK for every limb plus the per-frame equilibrium check."""
    hip = model.hip(com)
    shoulder = model.shoulder(com)
    joints = {}
    tips = {}
    targets = {c.limb: _sagittal_point(c) for c in stance.contacts}
    targets.update({k: v for k, v in tip_overrides.items() if v is not None})
    for limb, tip in targets.items():
        try:
            if limb.startswith("hand"):
                joints[limb] = model.limb_ik(shoulder, tip, model.arm_lengths,
                                             model.elbow_range, bend_sign=1.0)
            else:
                joints[limb] = model.limb_ik(hip, tip, model.leg_lengths,
                                             model.knee_range, bend_sign=-1.0)
        except ValueError as exc:
            raise TransitionError(idx, str(exc)) from exc
        tips[limb] = np.asarray(tip, dtype=float)
    result = check_static_equilibrium(stance, (float(com[0]), 0.0), model.mass)
    if not result.feasible:
        raise TransitionError(idx, f"static equilibrium infeasible at com x={com[0]:.3f}")
    return TransitionFrame(com.copy(), joints, tips, tuple(sorted(stance.limbs())), True)
