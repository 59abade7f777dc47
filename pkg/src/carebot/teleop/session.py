"""Operator session bookkeeping: watchdog, rate limiting, command queue."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from ..spatial import Twist
from .protocol import Heartbeat, ModeSwitch, VelocityCmd

WATCHDOG_TIMEOUT = 1.0
RATE_LIMIT_PER_SEC = 100


@dataclass
class SessionState:
    """Per-connection state; a silent second forces the twist to zero."""

    connection_id: str = ""
    last_command_time: float = -1e9
    head_enabled: bool = False
    left_arm_enabled: bool = False
    right_arm_enabled: bool = False
    gripper: dict = field(default_factory=lambda: {"left": 0.0, "right": 0.0})
    commanded_twist: Twist = field(default_factory=Twist)
    dropped_commands: int = 0
    _window_start: float = 0.0
    _window_count: int = 0

    def rate_limited(self, now: float) -> bool:
        if now - self._window_start >= 1.0:
            self._window_start = now
            self._window_count = 0
        self._window_count += 1
        if self._window_count > RATE_LIMIT_PER_SEC:
            self.dropped_commands += 1
            return True
        return False

    def note_command(self, now: float) -> None:
        self.last_command_time = now

    def stale(self, now: float) -> bool:
        return now - self.last_command_time > WATCHDOG_TIMEOUT

    def effective_twist(self, now: float) -> Twist:
        """The twist the controller may use: zero under watchdog."""
        if self.stale(now):
            return Twist()
        return self.commanded_twist

    def toggle(self, what: str) -> None:
        if what == "head":
            self.head_enabled = not self.head_enabled
        elif what == "left":
            self.left_arm_enabled = not self.left_arm_enabled
        elif what == "right":
            self.right_arm_enabled = not self.right_arm_enabled

    def apply(self, cmd, now: float) -> None:
        """Update session state from a decoded command (heartbeats keep the
        connection alive without counting as motion commands)."""
        if isinstance(cmd, Heartbeat):
            return
        self.note_command(now)
        if isinstance(cmd, VelocityCmd):
            self.commanded_twist = Twist(cmd.vx, cmd.vy, cmd.wz)
        elif cmd.type == "head_toggle":
            self.toggle("head")
        elif cmd.type == "arm_toggle":
            self.toggle(cmd.side)
        elif cmd.type == "gripper":
            self.gripper[cmd.side] = cmd.pressure


class CommandQueue:
    """Bounded handoff between the network loop and the control tick.

    Velocity commands may be dropped oldest-first under pressure; mode
    switches never are.
    """

    def __init__(self, maxlen: int = 64):
        self.maxlen = maxlen
        self._velocity: deque = deque(maxlen=maxlen)
        self._critical: deque = deque()

    def push(self, cmd) -> None:
        if isinstance(cmd, ModeSwitch):
            self._critical.append(cmd)
        elif isinstance(cmd, VelocityCmd):
            self._velocity.append(cmd)  # deque maxlen drops oldest
        else:
            self._critical.append(cmd)

    def drain(self) -> list:
        """All pending commands in arrival order within each class; mode
        switches and toggles first so they are never starved."""
        out = list(self._critical) + list(self._velocity)
        self._critical.clear()
        self._velocity.clear()
        return out
