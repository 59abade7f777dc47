"""Planar nonholonomic cart with load-dependent Coulomb friction.

The castered transfer device rolls along its heading and yaws about its
rotation center; lateral velocity is identically zero. Below the breakaway
force the cart does not move at all (stiction), which is what makes the
loaded start the interesting disturbance for the walking controller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..locomanip.types import TsdState
from ..spatial import PlanarPose, Twist

G = 9.81


@dataclass(frozen=True)
class CartModel:
    tare_mass: float = 30.0
    caster_mu: float = 0.02
    rotation_resistance: float = 15.0  # N·m of Coulomb yaw friction
    yaw_inertia_arm: float = 0.35      # I = m * arm^2

    def __post_init__(self):
        if self.tare_mass <= 0 or self.caster_mu < 0:
            raise ValueError("cart model parameters out of range")

    def total_mass(self, tsd: TsdState) -> float:
        return self.tare_mass + tsd.load_mass

    def breakaway_force(self, tsd: TsdState) -> float:
        return self.caster_mu * self.total_mass(tsd) * G


def cart_dynamics(tsd: TsdState, model: CartModel, wrench_world, dt: float) -> TsdState:
    """Advance the cart under a planar wrench applied at the handle.

    `wrench_world` is (fx, fy, tau) with the force in world coordinates and
    the torque about the rotation center. Motion integrates longitudinally
    along the heading plus yaw about the rotation center; the lateral force
    component does no work (caster constraint).
    """
    fx, fy, tau = (float(v) for v in np.asarray(wrench_world, dtype=float))
    m = model.total_mass(tsd)
    yaw = tsd.pose.yaw
    heading = np.array([math.cos(yaw), math.sin(yaw)])
    f_long = fx * heading[0] + fy * heading[1]

    v = tsd.velocity.vx
    breakaway = model.breakaway_force(tsd)
    if abs(v) < 1e-6:
        v = 0.0
        if abs(f_long) > breakaway:
            a = (f_long - math.copysign(breakaway, f_long)) / m
            v = a * dt
    else:
        a = (f_long - math.copysign(breakaway, v)) / m
        v_new = v + a * dt
        if v_new * v < 0.0:
            v_new = 0.0  # friction stops the cart inside the step
        v = v_new

    I = m * model.yaw_inertia_arm ** 2
    w = tsd.velocity.wz
    if abs(w) < 1e-6:
        w = 0.0
        if abs(tau) > model.rotation_resistance:
            alpha = (tau - math.copysign(model.rotation_resistance, tau)) / I
            w = alpha * dt
    else:
        alpha = (tau - math.copysign(model.rotation_resistance, w)) / I
        w_new = w + alpha * dt
        if w_new * w < 0.0:
            w_new = 0.0
        w = w_new

    # integrate: translate along the heading, rotate about the rotation center
    rc_world = tsd.pose.transform_point(tsd.rotation_center)
    dyaw = w * dt
    pose = tsd.pose
    new_xy = pose.xy + heading * (v * dt)
    if abs(dyaw) > 0:
        c, s = math.cos(dyaw), math.sin(dyaw)
        R = np.array([[c, -s], [s, c]])
        new_xy = rc_world + R @ (new_xy - rc_world)
    new_pose = PlanarPose(float(new_xy[0]), float(new_xy[1]), pose.yaw + dyaw)
    return replace(tsd, pose=new_pose, velocity=Twist(v, 0.0, w))
