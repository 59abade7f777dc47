"""Plant stepping, DCM feedback, and force admittance for the walking loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import clamp_to_polygon
from .types import LipmParams, LipmState


class SupportFaultError(RuntimeError):
    """No support polygon available: the controller must not emit a ZMP."""


def step_plant(state: LipmState, applied_zmp, params: LipmParams, dt: float,
               ext_accel=(0.0, 0.0)) -> LipmState:
    """Advance the pendulum exactly over dt under a constant applied ZMP.

    Uses the closed-form cosh/sinh solution of c_ddot = omega^2 (c - p),
    not an Euler step, so halving dt changes nothing but round-off.
    `ext_accel` shifts the effective pendulum fixed point to account for a
    constant external force per unit mass (hand reaction while pushing).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    omega = params.omega
    zmp = np.asarray(applied_zmp, dtype=float)
    a_ext = np.asarray(ext_accel, dtype=float)
    # constant external accel is equivalent to a shifted pendulum pivot
    zmp_eff = zmp - a_ext / (omega * omega)
    ch, sh = math.cosh(omega * dt), math.sinh(omega * dt)
    rel = state.com - zmp_eff
    com = zmp_eff + rel * ch + (state.com_vel / omega) * sh
    vel = rel * omega * sh + state.com_vel * ch
    return LipmState.make(com, vel, zmp, omega)


def dcm_feedback(state: LipmState, dcm_ref, zmp_ref, support_polygon,
                 k_dcm: float = 3.0) -> np.ndarray:
    """Commanded ZMP from capture-point feedback, clamped to the support polygon.

    k_dcm > 1 is required for a stable closed loop (the DCM diverges at
    omega, and the feedback must overcompensate the error to pull it back).
    """
    if k_dcm <= 1.0:
        raise ValueError("k_dcm must exceed 1 for closed-loop stability")
    if support_polygon is None or len(np.atleast_2d(support_polygon)) == 0:
        raise SupportFaultError("empty support polygon")
    raw = np.asarray(zmp_ref, dtype=float) + k_dcm * (state.dcm - np.asarray(dcm_ref, dtype=float))
    return clamp_to_polygon(np.asarray(support_polygon, dtype=float), raw)


@dataclass
class Admittance:
    """Leaky force-error integrator producing a bounded position offset.

    offset' = gain * (desired - measured) - leak * offset, clamped per axis.
    With zero error the offset decays to zero; with the leak disabled the
    fixed point sits exactly at wrench balance.
    """

    gain: float
    clamp: float
    leak: float = 0.0
    offset: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.offset = np.asarray(self.offset, dtype=float).copy()

    def update(self, desired, measured, dt: float) -> np.ndarray:
        desired = np.asarray(desired, dtype=float)
        measured = np.asarray(measured, dtype=float)
        if not (np.all(np.isfinite(desired)) and np.all(np.isfinite(measured))):
            raise ValueError("wrenches must be finite")
        rate = self.gain * (desired - measured) - self.leak * self.offset
        self.offset = np.clip(self.offset + rate * dt, -self.clamp, self.clamp)
        return self.offset.copy()

    def saturated(self, tol: float = 1e-12) -> bool:
        return bool(np.any(np.abs(self.offset) >= self.clamp - tol))


def foot_force_admittance(desired_wrench_per_foot: dict, measured_wrench_per_foot: dict,
                          admittances: dict, dt: float) -> dict:
    """Per-foot admittance update; returns the offset per foot id."""
    offsets = {}
    for foot, desired in desired_wrench_per_foot.items():
        measured = measured_wrench_per_foot[foot]
        offsets[foot] = admittances[foot].update(desired, measured, dt)
    return offsets
