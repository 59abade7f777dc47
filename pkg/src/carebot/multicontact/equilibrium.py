"""Static equilibrium as a linear feasibility problem over cone generators.

Every unilateral contact contributes one nonnegative coefficient per
(polygon vertex, friction-pyramid edge); any nonnegative combination
automatically satisfies the linearized cone and keeps the CoP inside the
patch, so gravity balance reduces to A lam = b, lam >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .contacts import Stance

GRAVITY = 9.81


def force_caps(slices, n_cols: int):
    """Rows limiting each capped contact's total normal force: each generator
    carries unit local normal force, so the cap is a sum over its columns."""
    rows, ubs = [], []
    for contact, sl in slices:
        if contact.max_normal_force is None:
            continue
        row = np.zeros(n_cols)
        row[sl] = 1.0
        rows.append(row)
        ubs.append(contact.max_normal_force)
    if not rows:
        return None, None
    return np.array(rows), np.array(ubs)
N_CONE_EDGES = 4


def _generators(mu: float) -> np.ndarray:
    """Edges of the 4-sided friction pyramid in the contact frame."""
    return np.array([
        [mu, mu, 1.0],
        [mu, -mu, 1.0],
        [-mu, mu, 1.0],
        [-mu, -mu, 1.0],
    ])


def contact_wrench_matrix(stance: Stance) -> tuple[np.ndarray, list]:
    """Columns of world-frame unit wrenches (force, torque about origin).

    Returns (A, slices) with one column slice per expanded unilateral
    contact, in expansion order.
    """
    cols = []
    slices = []
    start = 0
    for contact in stance.unilateral_expansion():
        R = contact.surface_pose.matrix[:3, :3]
        gens_world = _generators(contact.mu) @ R.T
        verts = contact.vertices_world()
        n_cols = len(verts) * N_CONE_EDGES
        for v in verts:
            for d in gens_world:
                cols.append(np.concatenate([d, np.cross(v, d)]))
        slices.append((contact, slice(start, start + n_cols)))
        start += n_cols
    return np.array(cols).T, slices


def gravity_wrench_rhs(com_xy, mass: float, g: float = GRAVITY,
                       com_accel=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Required net contact wrench: supports gravity plus any CoM acceleration.

    Only the horizontal CoM position enters the torque with vertical
    gravity; the quasi-static check passes com_accel = 0.
    """
    com = np.array([com_xy[0], com_xy[1], 0.0])
    f_req = mass * (np.asarray(com_accel, dtype=float) - np.array([0.0, 0.0, -g]))
    tau_req = np.cross(com, f_req)
    return np.concatenate([f_req, tau_req])


@dataclass(frozen=True)
class EquilibriumResult:
    feasible: bool
    distribution: dict | None  # limb -> (force_world, torque_about_origin)

    def net_wrench(self) -> np.ndarray:
        total = np.zeros(6)
        for f, tau in self.distribution.values():
            total += np.concatenate([f, tau])
        return total


def check_static_equilibrium(stance: Stance, com_xy, mass: float,
                             g: float = GRAVITY) -> EquilibriumResult:
    """Gravity balance subject to friction cones and CoP membership.

    Solved as LP feasibility over the generator coefficients; a feasible
    stance returns a witness wrench distribution per limb.
    """
    A, slices = contact_wrench_matrix(stance)
    b = gravity_wrench_rhs(com_xy, mass, g)
    scale = mass * g
    # lam stays in newtons (A_eq and b_eq share the scaling), so the force
    # caps apply unscaled
    A_ub, b_ub = force_caps(slices, A.shape[1])
    res = linprog(np.zeros(A.shape[1]), A_eq=A / scale, b_eq=b / scale,
                  A_ub=A_ub, b_ub=b_ub, bounds=(0, None), method="highs")
    if not res.success:
        return EquilibriumResult(False, None)
    lam = res.x
    dist = {}
    for contact, sl in slices:
        cols = A[:, sl]
        w = cols @ lam[sl]
        limb = contact.limb
        if limb in dist:
            prev = dist[limb]
            dist[limb] = (prev[0] + w[:3], prev[1] + w[3:])
        else:
            dist[limb] = (w[:3], w[3:])
    return EquilibriumResult(True, dist)


def check_dynamic_feasibility(stance: Stance, com, com_accel, mass: float,
                              g: float = GRAVITY, force_tol: float = 5.0) -> bool:
    """Whether the wrench implied by the CoM acceleration is producible by
    the contacts, within a force tolerance (bounded-least-squares distance
    to the generator cone)."""
    from scipy.optimize import lsq_linear

    A, _ = contact_wrench_matrix(stance)
    com = np.asarray(com, dtype=float)
    b = gravity_wrench_rhs(com[:2], mass, g, com_accel)
    # torque about the actual CoM point (including height) for the dynamic case
    b[3:] = np.cross(np.array([com[0], com[1], com[2] if len(com) > 2 else 0.0]),
                     b[:3])
    scale = mass * g
    res = lsq_linear(A / scale, b / scale, bounds=(0, np.inf), method="bvls", tol=1e-12)
    r = A @ res.x - b
    return (float(np.linalg.norm(r[:3])) <= force_tol
            and float(np.linalg.norm(r[3:])) <= force_tol)


def com_x_interval(stance: Stance, mass: float, g: float = GRAVITY,
                   y: float = 0.0) -> tuple[float, float] | None:
    """Feasible CoM x-range at the given y, computed by two LPs with the CoM
    coordinate as a free variable (the region is convex, so an interval)."""
    A, slices = contact_wrench_matrix(stance)
    scale = mass * g
    # b(cx) = b0 + cx * db ; move the cx term into the variable vector
    b0 = gravity_wrench_rhs((0.0, y), mass, g) / scale
    db = (gravity_wrench_rhs((1.0, y), mass, g) - gravity_wrench_rhs((0.0, y), mass, g)) / scale
    A_ext = np.hstack([A / scale, -db[:, None]])
    A_ub, b_ub = force_caps(slices, A.shape[1])
    if A_ub is not None:
        A_ub = np.hstack([A_ub, np.zeros((len(A_ub), 1))])
    bounds = [(0, None)] * A.shape[1] + [(None, None)]
    out = []
    for sign in (1.0, -1.0):
        c = np.zeros(A.shape[1] + 1)
        c[-1] = sign
        res = linprog(c, A_eq=A_ext, b_eq=b0, A_ub=A_ub, b_ub=b_ub,
                      bounds=bounds, method="highs")
        if res.status == 3:  # unbounded in this direction
            out.append(-sign * np.inf)
        elif not res.success:
            return None
        else:
            out.append(res.x[-1])
    lo, hi = out
    return (lo, hi) if lo <= hi else (hi, lo)
