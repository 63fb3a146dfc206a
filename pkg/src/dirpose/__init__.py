"""Distributed direction-only pose localization for leader-follower networks."""

from .dynamics import CoupledDynamics, NoiseModel, WorldState, initial_world
from .integrator import IntegratorConfig, NonFiniteState, advance, step
from .metrics import TraceRecord, detect_convergence, record
from .network import (
    GroundTruth,
    NetworkTopology,
    ValidationReport,
    build_K,
    design_gains,
    validate_geometry,
    validate_topology,
)
from .orientation import (
    DirectionBundle,
    OrientationEstimatorState,
    critical_points,
    error_function,
    error_vector,
    lyapunov_V,
    pick_k_V,
)
from .position import (
    constraint_residual,
    position_derivative,
    solve_position_closed_form,
)
from .scenario import (
    ParseError,
    Scenario,
    generate_cube_scenario,
    load_scenario,
    materialize,
    parse_scenario,
    report_from_trace,
    run,
    serialize_scenario,
    validate_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "CoupledDynamics",
    "DirectionBundle",
    "GroundTruth",
    "IntegratorConfig",
    "NetworkTopology",
    "NoiseModel",
    "NonFiniteState",
    "OrientationEstimatorState",
    "ParseError",
    "Scenario",
    "TraceRecord",
    "ValidationReport",
    "WorldState",
    "advance",
    "build_K",
    "constraint_residual",
    "critical_points",
    "design_gains",
    "detect_convergence",
    "error_function",
    "error_vector",
    "generate_cube_scenario",
    "initial_world",
    "load_scenario",
    "lyapunov_V",
    "materialize",
    "parse_scenario",
    "pick_k_V",
    "position_derivative",
    "record",
    "report_from_trace",
    "run",
    "serialize_scenario",
    "solve_position_closed_form",
    "step",
    "validate_geometry",
    "validate_scenario",
    "validate_topology",
]
