"""Plant state, footstep, and reference types for the walking controller."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..spatial import PlanarPose


@dataclass(frozen=True)
class LipmParams:
    """Inverted-pendulum plant constants and controller timing."""

    z_c: float = 0.8
    g: float = 9.81
    dt_ctrl: float = 0.005
    preview_horizon: float = 1.6

    def __post_init__(self):
        if self.z_c <= 0.0:
            raise ValueError("z_c must be positive")
        if self.dt_ctrl <= 0.0:
            raise ValueError("dt_ctrl must be positive")

    @property
    def omega(self) -> float:
        """Natural frequency sqrt(g / z_c), derived so it can never go stale."""
        return math.sqrt(self.g / self.z_c)

    def with_com_height(self, z_c: float) -> "LipmParams":
        return replace(self, z_c=z_c)


@dataclass(frozen=True)
class LipmState:
    """CoM position/velocity, ZMP, and the derived divergent component."""

    com: np.ndarray
    com_vel: np.ndarray
    zmp: np.ndarray
    dcm: np.ndarray

    def __post_init__(self):
        for name in ("com", "com_vel", "zmp", "dcm"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).copy())

    @staticmethod
    def make(com, com_vel, zmp, omega: float) -> "LipmState":
        com = np.asarray(com, dtype=float)
        com_vel = np.asarray(com_vel, dtype=float)
        return LipmState(com, com_vel, np.asarray(zmp, dtype=float), com + com_vel / omega)

    @staticmethod
    def at_rest(position=(0.0, 0.0)) -> "LipmState":
        p = np.asarray(position, dtype=float)
        return LipmState(p, np.zeros(2), p.copy(), p.copy())

    def dcm_consistent(self, omega: float, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.dcm - (self.com + self.com_vel / omega)) < tol))


class Foot(enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def other(self) -> "Foot":
        return Foot.RIGHT if self is Foot.LEFT else Foot.LEFT

    @property
    def sign(self) -> float:
        """Lateral sign of the foot in the body frame (+y is left)."""
        return 1.0 if self is Foot.LEFT else -1.0


@dataclass(frozen=True)
class Footstep:
    foot: Foot
    pose: PlanarPose
    touchdown_time: float
    liftoff_time: float

    def __post_init__(self):
        if self.liftoff_time >= self.touchdown_time:
            raise ValueError("liftoff must precede the swing's touchdown")


@dataclass(frozen=True)
class FootstepPlan:
    """Timed, alternating footstep sequence; earlier entries may already be on the ground."""

    steps: tuple[Footstep, ...]
    stride_limit: float = 0.4
    lateral_limit: float = 0.25
    yaw_limit: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        times = [s.touchdown_time for s in self.steps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("touchdown times must be strictly increasing")
        for a, b in zip(self.steps, self.steps[1:]):
            if a.foot is b.foot:
                raise ValueError("plan must alternate feet")

    def __len__(self) -> int:
        return len(self.steps)

    def last_touchdown(self) -> float:
        return self.steps[-1].touchdown_time if self.steps else 0.0

    def committed_prefix(self, now: float) -> tuple[Footstep, ...]:
        """Steps whose swing has already started; never repositioned."""
        return tuple(s for s in self.steps if s.liftoff_time <= now)


@dataclass(frozen=True)
class ZmpReference:
    """Piecewise-linear planar ZMP trajectory."""

    times: np.ndarray
    points: np.ndarray  # (N, 2)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(t) != len(p) or len(t) == 0:
            raise ValueError("times and points must be non-empty and equally long")
        if np.any(np.diff(t) < 0):
            raise ValueError("times must be non-decreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def sample(self, t) -> np.ndarray:
        """Linear interpolation; clamped at both ends. Scalar t gives (2,), array gives (N, 2)."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.interp(ts, self.times, self.points[:, 0])
        y = np.interp(ts, self.times, self.points[:, 1])
        out = np.stack([x, y], axis=-1)
        return out[0] if scalar else out

    def sample_grid(self, t0: float, dt: float, n: int) -> np.ndarray:
        ts = t0 + dt * np.arange(n)
        x = np.interp(ts, self.times, self.points[:, 0])
        y = np.interp(ts, self.times, self.points[:, 1])
        return np.stack([x, y], axis=-1)


@dataclass(frozen=True)
class StepTiming:
    """Nominal step rhythm; one step = single support + double support."""

    single_support: float = 0.8
    double_support: float = 0.2

    @property
    def period(self) -> float:
        return self.single_support + self.double_support


@dataclass(frozen=True)
class GaitConfig:
    """Stride box, stance geometry, and rhythm for footstep generation."""

    timing: StepTiming = field(default_factory=StepTiming)
    stance_width: float = 0.19
    stride_limit: float = 0.4
    lateral_limit: float = 0.25
    yaw_limit: float = 0.5
    plan_steps: int = 6

    @property
    def max_speed(self) -> float:
        """Per-axis velocity capability implied by the stride box and rhythm."""
        return self.stride_limit / (2.0 * self.timing.period)
