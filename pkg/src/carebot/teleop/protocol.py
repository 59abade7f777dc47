"""Teleoperation wire protocol: UTF-8 JSON documents, one per message.

Over the raw stream socket each document is length-prefixed (4-byte
big-endian); over WebSocket each document is one text frame. Unknown
fields are ignored so either side can extend messages; an unknown type is
rejected. All units are SI: m/s, rad/s, newtons; pressures and intensities
are dimensionless in [0, 1].

Command messages (operator -> robot):
    {"type": "velocity", "vx": float, "vy": float, "wz": float}
    {"type": "head_toggle"}
    {"type": "arm_toggle", "side": "left"|"right"}
    {"type": "gripper", "side": ..., "pressure": 0..1}
    {"type": "free_shoulder", "side": ...}
    {"type": "mode_switch", "target": str}
    {"type": "heartbeat", "t": float}

Feedback messages (robot -> operator):
    {"type": "haptic", "side": ..., "intensity": 0..1}
    {"type": "status", "head": bool, "left_arm": bool, "right_arm": bool}
    {"type": "fault", "text": str}
    {"type": "telemetry", ...}   # pose and scenario snapshot, see Telemetry
    {"type": "heartbeat", "t": float}
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, field

MAX_MESSAGE_BYTES = 1024
_SIDES = ("left", "right")


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class VelocityCmd:
    vx: float
    vy: float
    wz: float
    type: str = "velocity"

    def __post_init__(self):
        for v in (self.vx, self.vy, self.wz):
            if not math.isfinite(v):
                raise ProtocolError("velocity components must be finite")


@dataclass(frozen=True)
class HeadToggle:
    type: str = "head_toggle"


@dataclass(frozen=True)
class ArmToggle:
    side: str
    type: str = "arm_toggle"

    def __post_init__(self):
        _check_side(self.side)


@dataclass(frozen=True)
class GripperCmd:
    side: str
    pressure: float
    type: str = "gripper"

    def __post_init__(self):
        _check_side(self.side)
        if not math.isfinite(self.pressure):
            raise ProtocolError("pressure must be finite")
        object.__setattr__(self, "pressure", min(1.0, max(0.0, self.pressure)))


@dataclass(frozen=True)
class FreeShoulder:
    side: str
    type: str = "free_shoulder"

    def __post_init__(self):
        _check_side(self.side)


@dataclass(frozen=True)
class ModeSwitch:
    target: str
    type: str = "mode_switch"


@dataclass(frozen=True)
class Heartbeat:
    t: float = 0.0
    type: str = "heartbeat"


TeleopCommand = (VelocityCmd, HeadToggle, ArmToggle, GripperCmd, FreeShoulder,
                 ModeSwitch, Heartbeat)

_COMMAND_TYPES = {
    "velocity": (VelocityCmd, ("vx", "vy", "wz")),
    "head_toggle": (HeadToggle, ()),
    "arm_toggle": (ArmToggle, ("side",)),
    "gripper": (GripperCmd, ("side", "pressure")),
    "free_shoulder": (FreeShoulder, ("side",)),
    "mode_switch": (ModeSwitch, ("target",)),
    "heartbeat": (Heartbeat, ("t",)),
}


@dataclass(frozen=True)
class HapticPulse:
    side: str
    intensity: float
    type: str = "haptic"

    def __post_init__(self):
        _check_side(self.side)
        object.__setattr__(self, "intensity", min(1.0, max(0.0, float(self.intensity))))


@dataclass(frozen=True)
class StatusIcons:
    head: bool
    left_arm: bool
    right_arm: bool
    type: str = "status"


@dataclass(frozen=True)
class Fault:
    text: str
    type: str = "fault"


@dataclass(frozen=True)
class Telemetry:
    """Per-period world snapshot for the operator console (poses as [x, y, yaw])."""

    t: float
    robot: list
    tsd: list
    bed_true: list
    bed_tracked: list
    wheelchair: list
    controller: str
    phase: str
    track_converged: bool
    type: str = "telemetry"


FeedbackEvent = (HapticPulse, StatusIcons, Fault, Telemetry, Heartbeat)

_FEEDBACK_TYPES = {
    "haptic": (HapticPulse, ("side", "intensity")),
    "status": (StatusIcons, ("head", "left_arm", "right_arm")),
    "fault": (Fault, ("text",)),
    "telemetry": (Telemetry, ("t", "robot", "tsd", "bed_true", "bed_tracked",
                              "wheelchair", "controller", "phase", "track_converged")),
    "heartbeat": (Heartbeat, ("t",)),
}


def _check_side(side: str) -> None:
    if side not in _SIDES:
        raise ProtocolError(f"side must be one of {_SIDES}, got {side!r}")


def _encode(msg) -> bytes:
    doc = json.dumps(asdict(msg), separators=(",", ":"), sort_keys=True)
    blob = doc.encode("utf-8")
    if len(blob) > MAX_MESSAGE_BYTES:
        raise ProtocolError(f"message too large: {len(blob)} bytes")
    return blob


def _decode(blob: bytes, registry: dict):
    if len(blob) > MAX_MESSAGE_BYTES:
        raise ProtocolError(f"message too large: {len(blob)} bytes")
    try:
        doc = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed message: {exc}") from exc
    if not isinstance(doc, dict) or "type" not in doc:
        raise ProtocolError("message must be an object with a 'type' field")
    kind = doc["type"]
    if kind not in registry:
        raise ProtocolError(f"unknown message type {kind!r}")
    cls, fields = registry[kind]
    kwargs = {}
    for name in fields:
        if name not in doc:
            raise ProtocolError(f"{kind}: missing field {name!r}")
        kwargs[name] = doc[name]
    # unknown fields are ignored deliberately
    return cls(**kwargs)


def encode_command(cmd) -> bytes:
    return _encode(cmd)


def decode_command(blob: bytes):
    return _decode(blob, _COMMAND_TYPES)


def encode_feedback(evt) -> bytes:
    return _encode(evt)


def decode_feedback(blob: bytes):
    return _decode(blob, _FEEDBACK_TYPES)


def frame_message(blob: bytes) -> bytes:
    """Length-prefixed framing for the raw stream socket."""
    return struct.pack(">I", len(blob)) + blob


def unframe_messages(buffer: bytearray):
    """Yield complete payloads from the stream buffer, consuming them."""
    out = []
    while len(buffer) >= 4:
        (length,) = struct.unpack_from(">I", buffer, 0)
        if length > MAX_MESSAGE_BYTES:
            raise ProtocolError(f"frame length {length} exceeds limit")
        if len(buffer) < 4 + length:
            break
        out.append(bytes(buffer[4:4 + length]))
        del buffer[:4 + length]
    return out
