"""Placement of in-road wireless charging pads on a road network.

Build an instance (``padplan.network``), check a plan's charge levels
(``padplan.chargeflow``), formulate the mixed-integer model
(``padplan.formulation``), solve it (``padplan.solver``) and run the
sensitivity sweeps (``padplan.scenario``).
"""

__version__ = "0.1.0"

from padplan.chargeflow import (
    PadAssignment,
    check_feasibility,
    evaluate_charge_flow,
    evaluate_cost,
)
from padplan.formulation import FormulationOptions, apply_capacity, build_model
from padplan.network import NetworkInstance, load_instance, save_instance
from padplan.scenario import GeneratorSpec, generate_instance, sweep_ma, sweep_solar
from padplan.solver import SolverConfig, brute_force, solve_lp, solve_milp

__all__ = [
    "FormulationOptions",
    "GeneratorSpec",
    "NetworkInstance",
    "PadAssignment",
    "SolverConfig",
    "__version__",
    "apply_capacity",
    "brute_force",
    "build_model",
    "check_feasibility",
    "evaluate_charge_flow",
    "evaluate_cost",
    "generate_instance",
    "load_instance",
    "save_instance",
    "solve_lp",
    "solve_milp",
    "sweep_ma",
    "sweep_solar",
]
