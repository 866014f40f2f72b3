"""skyoff: deterministic simulator and optimizer for UAV-cluster offloading."""

from skyoff.domain import (
    LinkParams,
    Scenario,
    TaskRequest,
    UavNode,
    UserTerminal,
    load_scenario,
    scenario_from_json,
    scenario_to_json,
    validate_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "LinkParams",
    "Scenario",
    "TaskRequest",
    "UavNode",
    "UserTerminal",
    "load_scenario",
    "scenario_from_json",
    "scenario_to_json",
    "validate_scenario",
    "__version__",
]
