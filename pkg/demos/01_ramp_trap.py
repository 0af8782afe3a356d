"""Why aggregating identical units can hide a ramping limit.

The ramp-trap system has one cluster of slow base units and one expensive
peaker. Demand jumps in a single period. Treated as a block, the base
cluster can ramp as fast as the sum of its units, so the clustered model
(CCUC) happily skips the peaker. Unit by unit (IUC) that ramp is not
available, and the peaker has to run.

The slot-based model (PCUC) restores the individual limits while keeping
the aggregated integers, and lands on the IUC cost.

Run:  python3 demos/01_ramp_trap.py
"""

from ucflex import VariantId, build_formulation, build_ramp_trap_instance, extract_schedule
from ucflex.formulation import check_schedule_feasibility
from ucflex.formulation.schedule import disaggregate_schedule
from ucflex.solver_bridge import IN_PROCESS, solve_model

instance = build_ramp_trap_instance(units=10)
print(f"horizon {instance.horizon}, demand {instance.demand}")

objective = {}
outcomes = {}
for variant in (VariantId.IUC, VariantId.CCUC, VariantId.PCUC):
    out = solve_model(build_formulation(instance, variant), IN_PROCESS)
    outcomes[variant] = out
    objective[variant] = out.objective
    print(f"{variant.value:>6}: {out.status.value:<8} cost {out.objective:10.1f}")

iuc = objective[VariantId.IUC]
for variant in (VariantId.CCUC, VariantId.PCUC):
    print(f"{variant.value:>6} error vs IUC: {(iuc - objective[variant]) / iuc:.2%}")

# Spread the clustered answer over individual units and re-check it with the
# per-unit rules of the slot model: the cheap schedule breaks a unit's ramp.
schedule = extract_schedule(instance, VariantId.CCUC, outcomes[VariantId.CCUC].point)
findings = check_schedule_feasibility(instance, VariantId.PCUC, disaggregate_schedule(instance, schedule))
print("\nCCUC schedule checked against per-unit limits:")
for f in findings:
    print(f"  {f.tag}: cluster {f.cluster}, unit slot {f.g}, period {f.t}, excess {f.amount:g}")
