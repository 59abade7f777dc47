from .contacts import ContactMode, ContactSpec, ContactSequence, Stance, bilateral_to_unilateral
from .equilibrium import (
    EquilibriumResult,
    check_dynamic_feasibility,
    check_static_equilibrium,
    com_x_interval,
    contact_wrench_matrix,
)
from .planner import TransitionError, TransitionPlan, plan_transition, PlanarModel
from .stabilizer import centroidal_preview, stabilize_wrench, StabilizerGains
from .ladder import ladder_scene, climb_sequence

__all__ = [
    "ContactMode",
    "ContactSpec",
    "ContactSequence",
    "Stance",
    "bilateral_to_unilateral",
    "EquilibriumResult",
    "check_dynamic_feasibility",
    "check_static_equilibrium",
    "com_x_interval",
    "contact_wrench_matrix",
    "TransitionError",
    "TransitionPlan",
    "plan_transition",
    "PlanarModel",
    "centroidal_preview",
    "stabilize_wrench",
    "StabilizerGains",
    "ladder_scene",
    "climb_sequence",
]
