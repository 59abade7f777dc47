from .types import (
    GraspConfig,
    ManipForceProfile,
    MotionKind,
    PhaseForceTable,
    TrapezoidalProfile,
    TsdState,
    TsdTrajectory,
    Waypoint,
)
from .path import InfeasibleSegmentError, plan_tsd_path
from .arm import PlanarArm, ArmReachError
from .coupling import (
    HandAdmittance,
    RouteCorrection,
    apply_pose_correction,
    build_force_profile,
    generate_footsteps_from_tsd,
    manip_force_feedforward,
)

__all__ = [
    "GraspConfig",
    "ManipForceProfile",
    "MotionKind",
    "PhaseForceTable",
    "TrapezoidalProfile",
    "TsdState",
    "TsdTrajectory",
    "Waypoint",
    "InfeasibleSegmentError",
    "plan_tsd_path",
    "PlanarArm",
    "ArmReachError",
    "HandAdmittance",
    "RouteCorrection",
    "apply_pose_correction",
    "build_force_profile",
    "generate_footsteps_from_tsd",
    "manip_force_feedforward",
]
