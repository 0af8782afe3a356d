"""Unit-commitment MILP formulations: IUC, CCUC and the slotted PCUC family."""

from .builders import (
    ALL_VARIANTS,
    CLUSTER_GROUPS,
    SLOT_GROUPS,
    SYSTEM_GROUPS,
    VariantId,
    build_formulation,
    build_ordered_subsystem,
    cluster_constraints,
    cluster_tags,
    cluster_variables,
    expected_tags,
    gen_aggregation,
    gen_cluster_capacity,
    gen_cluster_ramps,
    gen_commitment_logic,
    gen_system_constraints,
    gen_unit_capacity,
    gen_unit_ordering,
    gen_unit_ramps,
    gen_unit_susd_capacity,
    initial_slot_state,
    model_clusters,
    row_name,
    unit_clusters,
    var_name,
)
from .schedule import (
    ClusterSchedule,
    Finding,
    Schedule,
    ScheduleError,
    check_schedule_feasibility,
    disaggregate_schedule,
    extract_schedule,
    projection_violations,
    schedule_cost,
)
