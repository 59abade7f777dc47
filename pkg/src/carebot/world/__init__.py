from .cart import CartModel, cart_dynamics
from .sim import RobotCommands, SimWorld, WorldConfig, WorldState
from .scenario import ScenarioReport, load_scenario, run_scenario, validate_scenario

__all__ = [
    "CartModel",
    "cart_dynamics",
    "RobotCommands",
    "SimWorld",
    "WorldConfig",
    "WorldState",
    "ScenarioReport",
    "load_scenario",
    "run_scenario",
    "validate_scenario",
]
