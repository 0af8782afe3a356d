"""A miniature version of the formulation comparison.

Two seeded day-ahead systems (three clusters of three units), two reserve levels, all five formulations. Each cell
is solved, its point re-checked against the model, and the objective gap
to IUC reported. The markdown table printed at the end has the same layout
as ``ucflex compare --format markdown``.

Runs a subprocess solver per cell (the bundled HiGHS runner) unless
UCFLEX_SOLVER_CMD points somewhere else. Takes a minute or two.

Run:  python3 demos/02_compare_variants.py
"""

from ucflex.harness import ExperimentPlan, emit_report, relaxation_order_violations, run_experiment
from ucflex.instance import GeneratorConfig
from ucflex.solver_bridge import SolverConfig

configs = [GeneratorConfig(seed=s, n_clusters=3, units_per_cluster=3, horizon=24) for s in (1, 2)]
plan = ExperimentPlan(
    instances=configs,
    reserve_levels=(0.05, 0.10),
    solver=SolverConfig.from_env(mip_gap=1e-6),
)
report = run_experiment(plan)

print(emit_report(report, "markdown"))
for variant in ("CCUC", "PCUC_S", "PCUC_R", "PCUC"):
    print(f"mean error {variant:>6}: {report.mean_error(variant):.4%}")

bad = relaxation_order_violations(report, 1e-6)
print("relaxation ordering:", "holds on every cell" if not bad else bad)
if report.failed:
    print("failed cells:", [(r.instance, r.variant.value, r.message) for r in report.failed])
