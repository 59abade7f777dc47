"""Controller registry with seamless online switching.

Controllers are thin: each tick they contribute named tasks (soft, weighted)
and constraints (hard) over a shared reduced-model decision vector, which
one common solver turns into commands. Because the walking engine and its
preview state live in the shared state rather than in any controller,
switching controllers cannot jump the commanded CoM.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import clamp_to_polygon, contains_point


@dataclass(frozen=True)
class Task:
    """Soft objective: pull selected decision components toward a target."""

    name: str
    target: np.ndarray
    weight: float = 1.0
    components: tuple = (0, 1)

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError("task weight must be positive")
        object.__setattr__(self, "target", np.asarray(self.target, dtype=float))


@dataclass(frozen=True)
class PolygonConstraint:
    """Hard constraint: selected components stay inside a convex polygon."""

    name: str
    polygon: np.ndarray
    components: tuple = (0, 1)

    def __post_init__(self):
        object.__setattr__(self, "polygon", np.asarray(self.polygon, dtype=float))


class TaskSet:
    def __init__(self, tasks=()):
        self.tasks = []
        names = set()
        for t in tasks:
            if t.name in names:
                raise ValueError(f"duplicate task name {t.name!r}")
            names.add(t.name)
            self.tasks.append(t)

    def __iter__(self):
        return iter(self.tasks)

    def __len__(self):
        return len(self.tasks)


def solve_tasks(tasks: TaskSet, constraints, fallback: np.ndarray, dim: int = 2) -> np.ndarray:
    """Weighted least squares over the decision vector, then hard projection.

    With no tasks the fallback (posture hold) is returned; constraints are
    enforced by cyclic projection, which is exact for the single support-
    polygon constraint this stack uses.
    """
    if len(tasks) == 0:
        x = np.asarray(fallback, dtype=float).copy()
    else:
        H = np.zeros((dim, dim))
        g = np.zeros(dim)
        for t in tasks:
            S = np.zeros((len(t.components), dim))
            for row, comp in enumerate(t.components):
                S[row, comp] = 1.0
            H += t.weight * S.T @ S
            g += t.weight * S.T @ t.target
        # unselected components fall back to posture hold
        for i in range(dim):
            if H[i, i] == 0.0:
                H[i, i] = 1e-9
                g[i] = 1e-9 * fallback[i]
        x = np.linalg.solve(H, g)
    for _ in range(8):
        moved = False
        for c in constraints:
            sub = x[list(c.components)]
            if not contains_point(c.polygon, sub):
                x[list(c.components)] = clamp_to_polygon(c.polygon, sub)
                moved = True
        if not moved:
            break
    return x


@dataclass(frozen=True)
class Transition:
    target: str
    guard: Callable  # guard(context) -> bool


@dataclass
class State:
    name: str
    transitions: list = field(default_factory=list)
    on_enter: Callable = None
    on_exit: Callable = None


class StatechartError(ValueError):
    pass


class Statechart:
    """Deterministic flat statechart: first true guard in declaration order fires."""

    def __init__(self, states: list, initial: str):
        self.states = {s.name: s for s in states}
        if len(self.states) != len(states):
            raise StatechartError("duplicate state names")
        if initial not in self.states:
            raise StatechartError(f"initial state {initial!r} not defined")
        for s in states:
            for t in s.transitions:
                if t.target not in self.states:
                    raise StatechartError(
                        f"state {s.name!r} transitions to unknown state {t.target!r}")
        unreachable = self._unreachable(initial)
        if unreachable:
            raise StatechartError(f"unreachable states: {sorted(unreachable)}")
        self.initial = initial
        self.current = initial
        self.entered_at: float = 0.0

    def _unreachable(self, initial: str) -> set:
        seen = {initial}
        frontier = [initial]
        while frontier:
            for t in self.states[frontier.pop()].transitions:
                if t.target not in seen:
                    seen.add(t.target)
                    frontier.append(t.target)
        return set(self.states) - seen

    def reset(self, now: float, context=None) -> None:
        self.current = self.initial
        self.entered_at = now
        state = self.states[self.current]
        if state.on_enter:
            state.on_enter(context)

    def step(self, context, now: float) -> Optional[str]:
        """Evaluate guards once; returns the new state name if a transition fired."""
        state = self.states[self.current]
        for t in state.transitions:
            if t.guard(context):
                if state.on_exit:
                    state.on_exit(context)
                self.current = t.target
                self.entered_at = now
                nxt = self.states[t.target]
                if nxt.on_enter:
                    nxt.on_enter(context)
                return t.target
        return None

    def time_in_state(self, now: float) -> float:
        return now - self.entered_at


@dataclass(frozen=True)
class SwitchRequest:
    target: str
    initiator: str  # scenario | operator | fault
    timestamp: float


@dataclass(frozen=True)
class SwitchRecord:
    request: SwitchRequest
    executed_at: float
    deferred: bool
    outgoing: str
    no_op: bool = False


@dataclass(frozen=True)
class TickResult:
    controller: str
    state_name: str
    commanded: np.ndarray
    tasks: TaskSet
    fault: Optional[str]
    switches: tuple


class ModeManager:
    """Single-writer registry: switches drain at tick boundaries only.

    A switch requested mid single-support is deferred to the next double
    support; the incoming controller initializes from the live shared state
    through its on_activate hook (never a reset).
    """

    def __init__(self, shared):
        self.shared = shared
        self.controllers: dict = {}
        self.active_id: Optional[str] = None
        self._queue: deque = deque()
        self.audit: list = []
        self.last_commanded: np.ndarray = np.zeros(2)

    def register_controller(self, controller) -> str:
        cid = controller.controller_id
        if cid in self.controllers:
            raise ValueError(f"controller id {cid!r} already registered")
        if controller.statechart is not None and not isinstance(controller.statechart, Statechart):
            raise StatechartError("controller statechart must be a validated Statechart")
        self.controllers[cid] = controller
        if self.active_id is None:
            self.active_id = cid
            controller.on_activate(self.shared, 0.0)
        return cid

    def request_switch(self, req: SwitchRequest) -> None:
        if req.target not in self.controllers:
            raise ValueError(f"unknown controller {req.target!r}")
        self._queue.append(req)

    @property
    def active(self):
        return self.controllers[self.active_id]

    def _switchable(self, now: float) -> bool:
        return self.active.interruptible(self.shared, now)

    def _drain_switches(self, now: float) -> list:
        executed = []
        while self._queue:
            req = self._queue[0]
            if req.target == self.active_id:
                self._queue.popleft()
                record = SwitchRecord(req, now, deferred=False, outgoing=self.active_id,
                                      no_op=True)
                self.audit.append(record)
                executed.append(record)
                continue
            if not self._switchable(now):
                break  # deferred: stays queued until the next safe window
            self._queue.popleft()
            outgoing = self.active
            outgoing.on_deactivate(self.shared, now)
            self.active_id = req.target
            self.active.on_activate(self.shared, now)
            record = SwitchRecord(req, now, deferred=now > req.timestamp + 1e-9,
                                  outgoing=outgoing.controller_id)
            self.audit.append(record)
            executed.append(record)
        return executed

    def tick(self, now: float) -> TickResult:
        switches = tuple(self._drain_switches(now))
        controller = self.active
        fault = None
        try:
            tasks, constraints = controller.update(self.shared, now)
        except Exception as exc:  # controller fault: hold posture, report
            tasks, constraints = TaskSet(), []
            fault = f"{controller.controller_id}: {exc}"
        commanded = solve_tasks(tasks, constraints, fallback=self.last_commanded)
        self.last_commanded = commanded.copy()
        state_name = controller.statechart.current if controller.statechart else ""
        return TickResult(controller.controller_id, state_name, commanded, tasks,
                          fault, switches)
