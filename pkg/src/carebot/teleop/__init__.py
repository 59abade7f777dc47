from .protocol import (
    ArmToggle,
    FeedbackEvent,
    Fault,
    FreeShoulder,
    GripperCmd,
    HapticPulse,
    HeadToggle,
    Heartbeat,
    ModeSwitch,
    ProtocolError,
    StatusIcons,
    TeleopCommand,
    Telemetry,
    VelocityCmd,
    decode_command,
    decode_feedback,
    encode_command,
    encode_feedback,
)
from .mapping import StickLimits, gripper_from_trigger, haptic_from_wrench, velocity_from_sticks, HapticState
from .session import CommandQueue, SessionState, WATCHDOG_TIMEOUT
from .server import TeleopServer

__all__ = [
    "ArmToggle",
    "FeedbackEvent",
    "Fault",
    "FreeShoulder",
    "GripperCmd",
    "HapticPulse",
    "HeadToggle",
    "Heartbeat",
    "ModeSwitch",
    "ProtocolError",
    "StatusIcons",
    "TeleopCommand",
    "Telemetry",
    "VelocityCmd",
    "decode_command",
    "decode_feedback",
    "encode_command",
    "encode_feedback",
    "StickLimits",
    "gripper_from_trigger",
    "haptic_from_wrench",
    "velocity_from_sticks",
    "HapticState",
    "CommandQueue",
    "SessionState",
    "WATCHDOG_TIMEOUT",
    "TeleopServer",
]
