from .app import create_app, resolve_scenario_path

__all__ = ["create_app", "resolve_scenario_path"]
