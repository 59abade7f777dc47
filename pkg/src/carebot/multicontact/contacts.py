"""Surface contacts, stances, and contact sequences for multi-contact balance.

A bilateral contact (a grasped handrail can pull as well as push) is
approximated as a pair of coincident unilateral surface contacts with
opposed normals, which lets one static-equilibrium machinery cover both.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import polygon_area
from ..spatial import Pose3


class ContactMode(enum.Enum):
    UNILATERAL = "unilateral"
    BILATERAL = "bilateral"


@dataclass(frozen=True)
class ContactSpec:
    """Flat contact patch: pose's +z is the surface normal (pointing away
    from the support, into the robot)."""

    limb: str
    surface_pose: Pose3
    polygon: np.ndarray  # (K, 2) CCW convex, surface frame
    mu: float = 0.6
    mode: ContactMode = ContactMode.UNILATERAL
    max_normal_force: float | None = None  # grasp-strength cap (N)

    def __post_init__(self):
        poly = np.asarray(self.polygon, dtype=float).reshape(-1, 2)
        if len(poly) < 3:
            raise ValueError("contact polygon needs at least 3 vertices")
        if polygon_area(poly) <= 0:
            raise ValueError("contact polygon must be convex CCW")
        if self.mu <= 0:
            raise ValueError("friction coefficient must be positive")
        object.__setattr__(self, "polygon", poly)

    @property
    def normal_world(self) -> np.ndarray:
        return self.surface_pose.rotate_vector(np.array([0.0, 0.0, 1.0]))

    def vertices_world(self) -> np.ndarray:
        pts = np.hstack([self.polygon, np.zeros((len(self.polygon), 1))])
        return self.surface_pose.transform_point(pts)


def bilateral_to_unilateral(c: ContactSpec) -> tuple[ContactSpec, ContactSpec]:
    """Split a bilateral contact into an opposed pair of unilateral ones.

    The pair shares the patch geometry and friction; the flipped member's
    frame is rotated pi about the local x axis so its +z is the opposite
    normal (the polygon is mirrored to stay CCW).
    """
    if c.mode is not ContactMode.BILATERAL:
        raise ValueError(f"contact {c.limb!r} is already unilateral")
    push = ContactSpec(c.limb + "/push", c.surface_pose, c.polygon, c.mu,
                       ContactMode.UNILATERAL, c.max_normal_force)
    flip = Pose3.from_axis_angle((1.0, 0.0, 0.0), math.pi,
                                 parent_frame=c.surface_pose.child_frame,
                                 child_frame=c.surface_pose.child_frame + "_flip")
    mirrored = c.polygon[::-1] * np.array([1.0, -1.0])
    pull = ContactSpec(c.limb + "/pull", c.surface_pose.compose(flip), mirrored, c.mu,
                       ContactMode.UNILATERAL, c.max_normal_force)
    return push, pull


@dataclass(frozen=True)
class Stance:
    """Set of simultaneous contacts plus a CoM bounding box (m, world)."""

    contacts: tuple
    com_box: np.ndarray = field(default_factory=lambda: np.array([[-2.0, -2.0, 0.0],
                                                                  [2.0, 2.0, 2.0]]))
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "contacts", tuple(self.contacts))
        object.__setattr__(self, "com_box", np.asarray(self.com_box, dtype=float))
        if len(self.contacts) == 0:
            raise ValueError("stance needs at least one contact")
        limbs = [c.limb for c in self.contacts]
        if len(set(limbs)) != len(limbs):
            raise ValueError(f"duplicate limb ids in stance: {limbs}")

    def limbs(self) -> set:
        return {c.limb for c in self.contacts}

    def unilateral_expansion(self) -> tuple:
        """All contacts as unilateral specs (bilaterals become pairs)."""
        out = []
        for c in self.contacts:
            if c.mode is ContactMode.BILATERAL:
                out.extend(bilateral_to_unilateral(c))
            else:
                out.append(c)
        return tuple(out)

    def contact_of(self, limb: str):
        for c in self.contacts:
            if c.limb == limb:
                return c
        return None


@dataclass(frozen=True)
class ContactSequence:
    """Ordered stances; consecutive stances differ in exactly one limb."""

    stances: tuple

    def __post_init__(self):
        object.__setattr__(self, "stances", tuple(self.stances))
        for i, (a, b) in enumerate(zip(self.stances, self.stances[1:])):
            if n_limb_changes(a, b) != 1:
                raise ValueError(
                    f"stances {i} -> {i + 1} must differ in exactly one limb")

    def __len__(self) -> int:
        return len(self.stances)

    def reversed(self) -> "ContactSequence":
        return ContactSequence(tuple(self.stances[::-1]))


def n_limb_changes(a: Stance, b: Stance) -> int:
    """Limbs added, removed, or moved between two stances."""
    changed = a.limbs() ^ b.limbs()
    for limb in a.limbs() & b.limbs():
        ca, cb = a.contact_of(limb), b.contact_of(limb)
        same_pose = (np.allclose(ca.surface_pose.translation, cb.surface_pose.translation)
                     and np.allclose(ca.surface_pose.rotation, cb.surface_pose.rotation))
        if not same_pose or ca.mode is not cb.mode:
            changed.add(limb)
    return len(changed)
