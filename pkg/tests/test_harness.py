import csv
import io

import pytest

from ucflex.formulation import VariantId
from ucflex.harness import (
    CSV_COLUMNS,
    CellResult,
    ExperimentPlan,
    ExperimentReport,
    emit_report,
    format_percent,
    relaxation_order_violations,
    run_experiment,
)
from ucflex.instance import ClusterSpec, GeneratorConfig, SystemInstance, build_ramp_trap_instance
from ucflex.solver_bridge import IN_PROCESS, Status


def zero_instance():
    c = ClusterSpec("c", 2, 100.0, 20.0, 30.0, 30.0, 40.0, 40.0, 2, 1, 10.0, 5.0, 100.0)
    return SystemInstance(3, (0.0,) * 3, (0.0,) * 3, (0.0,) * 3, (c,))


def fake_cell(**kw):
    base = dict(instance="a", reserve=0.05, variant=VariantId.CCUC, status=Status.OPTIMAL, objective=99.28,
                error_vs_iuc=0.0072, runtime_s=0.5, gap=0.0, n_binary=0, n_integer=72, n_continuous=100,
                n_constraints=300, n_nonzeros=900)
    base.update(kw)
    return CellResult(**base)


def test_plan_invariants():
    with pytest.raises(ValueError):
        ExperimentPlan(instances=[], solver=IN_PROCESS)
    with pytest.raises(ValueError):
        ExperimentPlan(instances=[("z", zero_instance())], variants=[], solver=IN_PROCESS)
    with pytest.raises(ValueError):
        ExperimentPlan(instances=[("z", zero_instance())], reserve_levels=[-0.1], solver=IN_PROCESS)
    plan = ExperimentPlan(instances=[("z", zero_instance())], variants=["pcuc-s"], solver=IN_PROCESS)
    assert plan.variants == (VariantId.PCUC_S,)


def test_zero_demand_plan():
    plan = ExperimentPlan(instances=[("zero", zero_instance())], solver=IN_PROCESS)
    report = run_experiment(plan)
    assert [r.variant for r in report.rows] == list(VariantId)
    assert all(r.objective == pytest.approx(0.0, abs=1e-9) for r in report.rows)
    assert all(r.error_vs_iuc == 0.0 for r in report.rows)
    assert all(r.runtime_s > 0 for r in report.rows)


def test_ramp_trap_plan():
    plan = ExperimentPlan(
        instances=[("trap", build_ramp_trap_instance())],
        variants=[VariantId.CCUC, VariantId.IUC, VariantId.PCUC],
        solver=IN_PROCESS,
    )
    report = run_experiment(plan)
    assert [r.variant for r in report.rows] == [VariantId.CCUC, VariantId.IUC, VariantId.PCUC]
    assert report.cell("trap", None, "IUC").error_vs_iuc == 0.0
    assert report.cell("trap", None, "CCUC").error_vs_iuc > 0
    assert abs(report.cell("trap", None, "PCUC").error_vs_iuc) <= 1e-3
    assert report.failed == []


def test_reserve_levels_and_order():
    plan = ExperimentPlan(
        instances=[GeneratorConfig(seed=3, n_clusters=2, units_per_cluster=2, horizon=6)],
        variants=[VariantId.IUC, VariantId.CCUC],
        reserve_levels=[0.05, 0.1],
        solver=IN_PROCESS,
    )
    report = run_experiment(plan)
    assert [(r.instance, r.reserve, r.variant.value) for r in report.rows] == [
        ("gen-s3", 0.05, "IUC"), ("gen-s3", 0.05, "CCUC"), ("gen-s3", 0.1, "IUC"), ("gen-s3", 0.1, "CCUC"),
    ]
    assert relaxation_order_violations(report, 1e-6) == []


def test_workers_do_not_change_rows():
    kw = dict(
        instances=[GeneratorConfig(seed=s, n_clusters=2, units_per_cluster=2, horizon=4) for s in range(3)],
        variants=[VariantId.IUC, VariantId.PCUC],
        solver=IN_PROCESS,
    )
    a = run_experiment(ExperimentPlan(workers=1, **kw))
    b = run_experiment(ExperimentPlan(workers=3, **kw))
    assert [(r.instance, r.variant, r.objective) for r in a.rows] == [(r.instance, r.variant, r.objective) for r in b.rows]


def test_repetitions_are_deterministic():
    plan = ExperimentPlan(
        instances=[GeneratorConfig(seed=1, n_clusters=2, units_per_cluster=2, horizon=6)],
        variants=[VariantId.PCUC],
        repetitions=2,
        solver=IN_PROCESS,
    )
    row = run_experiment(plan).rows[0]
    assert len(row.objectives) == 2 and row.objectives[0] == row.objectives[1]


def test_missing_anchor_leaves_errors_unavailable():
    plan = ExperimentPlan(instances=[("zero", zero_instance())], variants=[VariantId.CCUC], solver=IN_PROCESS)
    report = run_experiment(plan)
    assert report.rows[0].error_vs_iuc is None
    assert "unavailable" in emit_report(report, "csv")


def test_solver_failure_is_recorded():
    from ucflex.solver_bridge import SolverConfig

    broken = SolverConfig(command="no-such-solver {model_path} {solution_path}")
    plan = ExperimentPlan(instances=[("zero", zero_instance())], variants=[VariantId.IUC, VariantId.CCUC], solver=broken)
    report = run_experiment(plan)
    assert [r.status for r in report.rows] == [Status.ERROR, Status.ERROR]
    assert len(report.failed) == 2


def test_csv_schema():
    text = emit_report(ExperimentReport([fake_cell()]), "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 2 and len(rows[1]) == 12
    assert ",".join(CSV_COLUMNS) == (
        "instance,reserve,variant,objective,error_vs_iuc,runtime_s,gap,n_binary,n_integer,"
        "n_continuous,n_constraints,n_nonzeros"
    )


def test_empty_report_is_header_only():
    assert emit_report(ExperimentReport(), "csv").splitlines() == [",".join(CSV_COLUMNS)]


def test_percent_formatting():
    assert format_percent(0.0072) == "0.72%"
    assert format_percent(None) == "n/a"


def test_markdown_layout():
    report = ExperimentReport([
        fake_cell(variant=VariantId.IUC, objective=100.0, error_vs_iuc=0.0),
        fake_cell(),
    ])
    md = emit_report(report, "markdown")
    assert "| Reserve | Result | IUC | CCUC |" in md
    assert "| 5.00% | O.f. Error | 0.00% | 0.72% |" in md
    assert "Rtime [s]" in md
