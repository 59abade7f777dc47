from .types import (
    Foot,
    Footstep,
    FootstepPlan,
    LipmParams,
    LipmState,
    ZmpReference,
)
from .control import (
    Admittance,
    SupportFaultError,
    dcm_feedback,
    step_plant,
)
from .preview import CoMTrajectory, PreviewController, preview_com_trajectory
from .footsteps import (
    FootGeometry,
    ReplanResult,
    replan_footsteps,
    support_polygon_at,
    zmp_reference_from_plan,
)
from .engine import WalkingEngine

__all__ = [
    "Foot",
    "Footstep",
    "FootstepPlan",
    "LipmParams",
    "LipmState",
    "ZmpReference",
    "Admittance",
    "SupportFaultError",
    "dcm_feedback",
    "step_plant",
    "CoMTrajectory",
    "PreviewController",
    "preview_com_trajectory",
    "FootGeometry",
    "ReplanResult",
    "replan_footsteps",
    "support_polygon_at",
    "zmp_reference_from_plan",
    "WalkingEngine",
]
