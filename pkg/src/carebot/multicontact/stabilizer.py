"""Centroidal preview smoothing and PD wrench distribution.

The reference CoM from the quasi-static planner embeds feasibility, so the
preview tracker runs unconstrained and the result is re-checked against the
contact cones afterwards; online errors become a net wrench demand split
across the contacts by bounded least squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_discrete_are
from scipy.optimize import lsq_linear

from .contacts import Stance
from .equilibrium import check_dynamic_feasibility, contact_wrench_matrix, gravity_wrench_rhs


class PositionPreview:
    """Finite-horizon preview tracker for a jerk-driven triple integrator."""

    def __init__(self, dt: float, horizon: float, q: float = 1.0, r: float = 1e-6):
        self.dt = dt
        self.N = max(2, int(round(horizon / dt)))
        A = np.array([[1.0, dt, dt * dt / 2], [0, 1.0, dt], [0, 0, 1.0]])
        B = np.array([[dt ** 3 / 6], [dt * dt / 2], [dt]])
        C = np.array([[1.0, 0.0, 0.0]])
        P = solve_discrete_are(A, B, q * C.T @ C, np.array([[r]]))
        den = (r + B.T @ P @ B).item()
        self.K = (B.T @ P @ A) / den
        A_cl = A - B @ self.K
        w = np.zeros(self.N)
        v = (q * C.T).reshape(3)
        for i in range(self.N - 1):
            w[i] = (B.reshape(3) @ v) / den
            v = A_cl.T @ v
        term = np.linalg.matrix_power(A_cl.T, self.N - 1) @ P[:, 0]
        w[self.N - 1] = (B.reshape(3) @ term) / den
        self.w = w
        self.A, self.B = A, B

    def smooth(self, reference: np.ndarray) -> np.ndarray:
        """Track a (T, k) reference; returns positions of the same shape."""
        ref = np.asarray(reference, dtype=float)
        T, k = ref.shape
        padded = np.vstack([ref, np.tile(ref[-1], (self.N, 1))])
        x = np.zeros((3, k))
        x[0] = ref[0]
        out = np.zeros_like(ref)
        out[0] = ref[0]
        for t in range(1, T):
            window = padded[t:t + self.N]
            u = -self.K @ x + self.w @ window
            x = self.A @ x + self.B @ u.reshape(1, k)
            out[t] = x[0]
        return out


def centroidal_preview(reference_com: np.ndarray, stances: list, mass: float,
                       dt: float = 0.04, horizon: float = 0.8,
                       check: bool = True) -> tuple[np.ndarray, list]:
    """Smooth, dynamically consistent CoM trajectory tracking the reference.

    `stances[t]` names the active stance per frame for the a-posteriori
    equilibrium check (the preview itself is unconstrained). Returns the
    trajectory and the list of frame indices that failed the check.
    """
    ref = np.asarray(reference_com, dtype=float)
    smooth = PositionPreview(dt, horizon).smooth(ref)
    warnings = []
    if check and len(smooth) > 2:
        acc = np.zeros_like(smooth)
        acc[1:-1] = (smooth[2:] - 2 * smooth[1:-1] + smooth[:-2]) / dt ** 2
        for t in range(1, len(smooth) - 1):
            com3 = np.array([smooth[t, 0], 0.0, smooth[t, 1]])
            accel3 = np.array([acc[t, 0], 0.0, acc[t, 1]])
            if not check_dynamic_feasibility(stances[t], com3, accel3, mass):
                warnings.append(t)
    return smooth, warnings


@dataclass(frozen=True)
class StabilizerGains:
    """Shared PD set; the same values serve climbing up and down."""

    kp: float = 120.0
    kd: float = 35.0
    damping: float = 200.0  # N per m/s of limb admittance offset


@dataclass(frozen=True)
class WrenchModification:
    per_limb: dict           # limb -> force delta (world, N)
    damping_offsets: dict    # limb -> velocity offset command (m/s)
    saturated: bool
    residual: float


def stabilize_wrench(desired_com, desired_vel, actual_com, actual_vel,
                     stance: Stance, gains: StabilizerGains,
                     mass: float = 54.0) -> WrenchModification:
    """Distribute the PD wrench demand over the contacts within their cones.

    The demand is expressed as a correction on top of the static witness
    distribution; allocation solves bounded least squares over the cone
    generator coefficients, so per-contact results always stay inside the
    friction cones. Infeasible demands are projected and flagged.
    """
    err_p = np.asarray(desired_com, dtype=float) - np.asarray(actual_com, dtype=float)
    err_v = np.asarray(desired_vel, dtype=float) - np.asarray(actual_vel, dtype=float)
    f_demand = gains.kp * err_p + gains.kd * err_v

    A, slices = contact_wrench_matrix(stance)
    com3 = np.array([actual_com[0], 0.0 if len(actual_com) < 3 else actual_com[1], 0.0])
    b0 = gravity_wrench_rhs((com3[0], com3[1]), mass)
    res0 = lsq_linear(A, b0, bounds=(0, np.inf))
    lam0 = res0.x

    f3 = np.zeros(3)
    f3[0] = f_demand[0]
    f3[2] = f_demand[-1]
    target = b0 + np.concatenate([f3, np.zeros(3)])
    # small Tikhonov term keeps the allocation minimum-norm, hence symmetric
    reg = 1e-6
    A_aug = np.vstack([A, np.sqrt(reg) * np.eye(A.shape[1])])
    t_aug = np.concatenate([target, np.sqrt(reg) * lam0])
    res = lsq_linear(A_aug, t_aug, bounds=(0, np.inf))
    lam = res.x
    achieved = A @ lam
    residual = float(np.linalg.norm(achieved[:3] - target[:3]))
    saturated = residual > 1.0  # N; demand not realizable inside the cones

    per_limb: dict = {}
    offsets: dict = {}
    for contact, sl in slices:
        delta = A[:3, sl] @ (lam[sl] - lam0[sl])
        limb = contact.limb.split("/")[0]
        per_limb[limb] = per_limb.get(limb, np.zeros(3)) + delta
    for limb, df in per_limb.items():
        offsets[limb] = df / gains.damping
    return WrenchModification(per_limb, offsets, saturated, residual)
