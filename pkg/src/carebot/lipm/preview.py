"""Preview control: finite-horizon tracking regulator for the cart-table model.

Per axis the plant is the jerk-driven triple integrator

    x = [c, c_dot, c_ddot],   x+ = A x + B u,   p = C x = c - (z_c / g) c_ddot

and the controller minimizes, over a preview window of N samples,

    sum_j  q (C x_j - ref_j)^2 + r u_j^2   +   (x_N - xbar)' P (x_N - xbar)

with P the stationary Riccati solution and xbar the rest state at the last
previewed reference sample. Anchoring the terminal cost at P makes the
window-optimal feedback gain stationary, so each control tick reduces to one
O(N) backward pass over the previewed reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_discrete_are

from .types import LipmParams, LipmState, ZmpReference

ZMP_TRACK_WEIGHT = 1.0
JERK_WEIGHT = 1e-6


def cart_table_system(dt: float, z_c: float, g: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    A = np.array([[1.0, dt, dt * dt / 2.0], [0.0, 1.0, dt], [0.0, 0.0, 1.0]])
    B = np.array([[dt ** 3 / 6.0], [dt * dt / 2.0], [dt]])
    C = np.array([[1.0, 0.0, -z_c / g]])
    return A, B, C


@dataclass(frozen=True)
class CoMTrajectory:
    """CoM trajectory sampled at the control period, with derivatives."""

    times: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray
    z_c: float
    g: float

    @property
    def zmp(self) -> np.ndarray:
        """ZMP implied by the cart-table relation."""
        return self.pos - (self.z_c / self.g) * self.acc

    def dcm(self, omega: float) -> np.ndarray:
        return self.pos + self.vel / omega


class PreviewController:
    """Stateful preview regulator; also usable statelessly via `control`.

    The internal state is the commanded CoM (position, velocity,
    acceleration) per axis, advanced by the controller's own plant model.
    """

    def __init__(self, params: LipmParams, q: float = ZMP_TRACK_WEIGHT, r: float = JERK_WEIGHT):
        self.params = params
        self.dt = params.dt_ctrl
        self.horizon_steps = max(2, int(round(params.preview_horizon / params.dt_ctrl)))
        self.A, self.B, self.C = cart_table_system(self.dt, params.z_c, params.g)
        Q = q * self.C.T @ self.C
        R = np.array([[r]])
        self.P = solve_discrete_are(self.A, self.B, Q, R)
        gain_den = (R + self.B.T @ self.P @ self.B).item()
        self.g_ff = 1.0 / gain_den
        self.K = (self.B.T @ self.P @ self.A) / gain_den
        self.A_cl = self.A - self.B @ self.K
        self.q = q
        self.r = r
        self.preview_weights = self._preview_weights()
        # state: (3, 2) = [pos; vel; acc] columns x, y
        self.x = np.zeros((3, 2))

    def _preview_weights(self) -> np.ndarray:
        """Per-sample feedforward weights: u = -K x + w . ref_window.

        Folding the backward pass into a fixed weight vector is exact because
        the terminal cost pins the Riccati recursion at its stationary point;
        only the last previewed sample carries the terminal-anchor weight.
        """
        N = self.horizon_steps
        AclT = self.A_cl.T
        qC = self.q * self.C.T.reshape(3)
        w = np.zeros(N)
        v = qC.copy()
        for i in range(N - 1):
            w[i] = self.g_ff * float(self.B.reshape(3) @ v)
            v = AclT @ v
        # v is now (AclT)^(N-1) applied to qC; the terminal anchor replaces
        # the running-cost weight at the final previewed sample
        term = np.linalg.matrix_power(AclT, N - 1) @ self.P[:, 0]
        w[N - 1] = self.g_ff * float(self.B.reshape(3) @ term)
        return w

    def reset_from(self, com, vel, acc) -> None:
        self.x = np.stack([np.asarray(com, float), np.asarray(vel, float), np.asarray(acc, float)])

    def control(self, x: np.ndarray, ref_window: np.ndarray) -> np.ndarray:
        """First window-optimal jerk for state x (3, k) and previewed refs (N, k)."""
        if ref_window.shape[0] != self.horizon_steps:
            raise ValueError("reference window must span the preview horizon")
        k = x.shape[1] if x.ndim == 2 else 1
        x = x.reshape(3, k)
        refs = ref_window.reshape(self.horizon_steps, k)
        u = -self.K @ x + self.preview_weights @ refs
        return u.reshape(k)

    def tick(self, ref_window: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Advance the commanded state one control period; returns (pos, vel, acc)."""
        u = self.control(self.x, ref_window)
        self.x = self.A @ self.x + self.B @ u.reshape(1, 2)
        return self.x[0].copy(), self.x[1].copy(), self.x[2].copy()

    @property
    def commanded_com(self) -> np.ndarray:
        return self.x[0].copy()

    def commanded_dcm(self) -> np.ndarray:
        return self.x[0] + self.x[1] / self.params.omega

    def commanded_zmp(self) -> np.ndarray:
        return (self.C @ self.x).reshape(2)


class HorizonTooShortError(ValueError):
    """Reference does not span the preview window."""


def preview_com_trajectory(zmp_ref: ZmpReference, params: LipmParams, init: LipmState,
                           q: float = ZMP_TRACK_WEIGHT, r: float = JERK_WEIGHT) -> CoMTrajectory:
    """Generate the CoM trajectory whose implied ZMP tracks the reference.

    The reference must span at least the preview horizon; it is held at its
    last sample beyond its end. The initial acceleration is inferred from the
    pendulum relation using the initial ZMP.
    """
    if zmp_ref.duration + 1e-12 < params.preview_horizon:
        raise HorizonTooShortError(
            f"reference spans {zmp_ref.duration:.3f} s < preview horizon {params.preview_horizon:.3f} s"
        )
    ctrl = PreviewController(params, q=q, r=r)
    dt = params.dt_ctrl
    n = int(round(zmp_ref.duration / dt)) + 1
    t0 = float(zmp_ref.times[0])
    omega2 = params.omega ** 2
    acc0 = omega2 * (init.com - init.zmp)
    ctrl.reset_from(init.com, init.com_vel, acc0)

    times = t0 + dt * np.arange(n)
    pos = np.zeros((n, 2))
    vel = np.zeros((n, 2))
    acc = np.zeros((n, 2))
    pos[0], vel[0], acc[0] = init.com, init.com_vel, acc0
    for k in range(1, n):
        window = zmp_ref.sample_grid(times[k - 1] + dt, dt, ctrl.horizon_steps)
        pos[k], vel[k], acc[k] = ctrl.tick(window)
    return CoMTrajectory(times, pos, vel, acc, params.z_c, params.g)
