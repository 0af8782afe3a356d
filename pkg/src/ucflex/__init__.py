"""Clustered unit commitment with individual ramping and startup/shutdown limits."""

from .instance import (
    ClusterSpec,
    GeneratorConfig,
    SystemInstance,
    build_ramp_trap_instance,
    generate_random_instance,
    load_instance,
    parse_instance,
    save_instance,
    serialize_instance,
    validate_instance,
    with_reserve_fraction,
)
from .milp import MilpModel, ModelStats, assemble_model, evaluate_point, model_statistics, relax_integrality
from .formulation import (
    VariantId,
    build_formulation,
    check_schedule_feasibility,
    extract_schedule,
)
from .solver_bridge import SolveOutcome, SolverConfig, Status, solve_model, write_mps

__version__ = "0.1.0"
