"""End-to-end acceptance suite.

Every solve below goes through the external-process bridge (the bundled
HiGHS runner unless ``UCFLEX_SOLVER_CMD`` names another solver) and is kept,
so that the round-trip criterion can re-check all of them at the end.
Each criterion prints one PASS/FAIL line, repeated in the terminal summary.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
import pytest

from ucflex import harness
from ucflex.formulation import (
    SLOT_GROUPS,
    VariantId,
    build_formulation,
    build_ordered_subsystem,
    check_schedule_feasibility,
    disaggregate_schedule,
    extract_schedule,
)
from ucflex.harness import ExperimentPlan, default_suite, relaxation_order_violations, run_experiment
from ucflex.instance import (
    ClusterSpec,
    GeneratorConfig,
    SystemInstance,
    build_ramp_trap_instance,
    generate_random_instance,
    with_reserve_fraction,
)
from ucflex.milp import MilpModel, evaluate_point, model_statistics, relax_integrality
from ucflex.oracle import brute_force_optimum
from ucflex.solver_bridge import OBJ_RTOL, SolveOutcome, SolverConfig, Status, mps_text, read_mps, solve_model

MIP_GAP = 1e-6
BRIDGE = SolverConfig.from_env(mip_gap=MIP_GAP, time_limit=1800.0)
SUITE_SIZE = 20
RESERVES = (0.05, 0.10)


@dataclass
class Solve:
    criterion: int
    model: MilpModel
    outcome: SolveOutcome


class Recorder:
    def __init__(self, criterion: int):
        self.criterion = criterion
        self.solves: list[Solve] = []

    def __call__(self, model, cfg=None, relaxed=False):
        out = solve_model(model, cfg, relaxed=relaxed)
        self.solves.append(Solve(self.criterion, relax_integrality(model) if relaxed else model, out))
        return out


def rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-12) if b != 0 else abs(a)


# ------------------------------------------------------------------ shared runs


@pytest.fixture(scope="session")
def tiny_runs():
    rec = Recorder(1)
    shapes = [(1, 3, 5), (3, 1, 4), (1, 2, 6), (2, 1, 6), (1, 1, 6), (1, 3, 4)]
    rows = []
    for k in range(12):
        n_clusters, units, T = shapes[k % len(shapes)]
        cfg = GeneratorConfig(
            seed=100 + k, n_clusters=n_clusters, units_per_cluster=units, horizon=T,
            min_up_range=(1, 2), min_down_range=(1, 2), reserve_fraction=0.05,
        )
        inst = generate_random_instance(cfg)
        oracle = brute_force_optimum(inst)
        iuc = rec(build_formulation(inst, VariantId.IUC), replace(BRIDGE, mip_gap=1e-9))
        rows.append((inst, oracle, iuc))
    return rows, rec


@pytest.fixture(scope="session")
def suite_runs():
    rec = Recorder(2)
    original = harness.solve_model
    harness.solve_model = rec
    try:
        report = run_experiment(
            ExperimentPlan(
                instances=default_suite(SUITE_SIZE),
                variants=list(VariantId),
                reserve_levels=RESERVES,
                solver=BRIDGE,
            )
        )
    finally:
        harness.solve_model = original
    return report, rec


@pytest.fixture(scope="session")
def noise_runs():
    rec = Recorder(8)
    original = harness.solve_model
    harness.solve_model = rec
    try:
        report = run_experiment(
            ExperimentPlan(
                instances=default_suite(SUITE_SIZE),
                variants=[VariantId.IUC],
                reserve_levels=RESERVES,
                solver=BRIDGE,
                iuc_noise_pct=1.0,
                noise_seed=7,
            )
        )
    finally:
        harness.solve_model = original
    return report, rec


@pytest.fixture(scope="session")
def trap_runs():
    rec = Recorder(3)
    out = {}
    for units in (10, 3):
        inst = build_ramp_trap_instance(units)
        out[units] = (inst, {v: rec(build_formulation(inst, v), BRIDGE) for v in VariantId})
    return out, rec


@pytest.fixture(scope="session")
def hull_runs():
    rec = Recorder(4)
    cluster = ClusterSpec("c", 4, 120.0, 30.0, 40.0, 40.0, 60.0, 60.0, 2, 2)
    template = build_ordered_subsystem(cluster, 6)
    slot_vars = [v.name for v in template.variables if v.group in SLOT_GROUPS]
    results = []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        objective = {name: float(rng.normal()) for name in slot_vars}
        model = build_ordered_subsystem(cluster, 6, objective)
        results.append((model, rec(model, BRIDGE, relaxed=True)))
    return results, rec


# ------------------------------------------------------------------ criteria


def test_c1_oracle_equivalence(tiny_runs, criterion_log):
    rows, _ = tiny_runs
    tus = {c.min_up for inst, _, _ in rows for c in inst.clusters}
    tds = {c.min_down for inst, _, _ in rows for c in inst.clusters}
    worst = 0.0
    bad = []
    for inst, oracle, iuc in rows:
        assert inst.n_units <= 3 and inst.horizon <= 6
        if iuc.status is not Status.OPTIMAL:
            bad.append(iuc.status.value)
            continue
        err = rel(iuc.objective, oracle.objective)
        worst = max(worst, err)
        if err > 1e-6:
            bad.append(f"{iuc.objective!r} vs {oracle.objective!r}")
    ok = len(rows) >= 10 and not bad and tus == {1, 2} and tds == {1, 2}
    criterion_log(1, ok, f"{len(rows)} instances, TU {sorted(tus)}, TD {sorted(tds)}, worst rel err {worst:.1e}")
    assert ok, bad


def test_c2_gap_closure(suite_runs, criterion_log):
    report, _ = suite_runs
    iuc_status = [r.status for r in report.rows if r.variant is VariantId.IUC]
    pcuc = report.errors(VariantId.PCUC)
    ccuc_mean, pcuc_mean = report.mean_error(VariantId.CCUC), report.mean_error(VariantId.PCUC)
    worst = max(abs(e) for e in pcuc) if pcuc else math.inf
    ok = (
        not report.failed
        and all(s is Status.OPTIMAL for s in iuc_status)
        and len(pcuc) == SUITE_SIZE * len(RESERVES)
        and worst <= 1e-3
        and ccuc_mean >= pcuc_mean
    )
    criterion_log(
        2, ok,
        f"{len(pcuc)} cells, worst |PCUC err| {worst:.2e}, mean CCUC err {ccuc_mean:.3%}, "
        f"mean PCUC err {pcuc_mean:.3%}",
    )
    assert ok, [(r.instance, r.reserve, r.variant.value, r.status.value, r.message) for r in report.failed]


def test_c3_ramp_trap(trap_runs, criterion_log):
    runs, _ = trap_runs
    details, ok = [], True
    for units, (inst, res) in runs.items():
        iuc, ccuc, pcuc = (res[v] for v in (VariantId.IUC, VariantId.CCUC, VariantId.PCUC))
        assert all(o.status is Status.OPTIMAL for o in (iuc, ccuc, pcuc))
        sep = (iuc.objective - ccuc.objective) / iuc.objective
        close = rel(pcuc.objective, iuc.objective)
        schedule = extract_schedule(inst, VariantId.CCUC, ccuc.point)
        flagged = [f for f in check_schedule_feasibility(inst, VariantId.PCUC, disaggregate_schedule(inst, schedule))
                   if f.tag == "eq23"]
        part = sep >= 5e-3 and close <= 1e-4 and bool(flagged)
        if units <= 4:
            oracle = brute_force_optimum(inst)
            part = part and rel(iuc.objective, oracle.objective) <= 1e-6
        ok = ok and part
        details.append(f"G={units}: CCUC {sep:.2%} below IUC, |PCUC-IUC| {close:.1e}, eq23 flags {len(flagged)}")
    criterion_log(3, ok, "; ".join(details))
    assert ok


def test_c4_convex_hull(hull_runs, criterion_log):
    results, _ = hull_runs
    worst = 0.0
    for model, out in results:
        assert out.status is Status.OPTIMAL, out.message
        ut = np.array([out.point[v.name] for v in model.variables if v.group == "u_tilde"])
        worst = max(worst, float(np.abs(ut - np.round(ut)).max()))
    ok = len(results) == 50 and worst <= 1e-6
    criterion_log(4, ok, f"{len(results)} LP optima, G=4, T=6, max fractionality {worst:.1e}")
    assert ok


def test_c5_relaxation_ordering(suite_runs, criterion_log):
    report, _ = suite_runs
    bad = relaxation_order_violations(report, MIP_GAP)
    groups = len({(r.instance, r.reserve) for r in report.rows})
    ok = not bad and not report.failed
    criterion_log(5, ok, f"{groups} instance/reserve pairs, {len(bad)} ordering violations")
    assert ok, bad


def test_c6_model_statistics(criterion_log):
    checked = 0
    for G in (1, 2, 3, 4, 6):
        for T in (1, 6, 24):
            for TU in (1, 2, 3):
                c = ClusterSpec("c", G, 100.0, 20.0, 30.0, 30.0, 40.0, 40.0, TU, 1)
                z = (0.0,) * T
                inst = SystemInstance(T, (50.0,) * T, z, z, (c,))
                s = {v: model_statistics(build_formulation(inst, v)) for v in VariantId}
                susd = 2 * G * T if TU >= 2 else G * T
                cap = T if TU >= 2 else 2 * T
                expected = {
                    VariantId.IUC: (3 * G * T, 0, 4 * G * T + 4 * T, G * (7 * T + cap) + 3 * T),
                    VariantId.CCUC: (0, 3 * T, 8 * T, 10 * T + cap),
                    VariantId.PCUC: (
                        G * T, 3 * T, 8 * T + 3 * G * T,
                        # eq01-03, capacity, eq08, eq11, eq12, eq13, eq14, eq15, eq16-19, su/sd, eq23-24, system
                        3 * T + cap + T + T + (G - 1) * T + T + 2 * G * T + 4 * T + susd + 2 * G * T + 3 * T,
                    ),
                }
                for v, (nb, ni, nc, nr) in expected.items():
                    got = (s[v].n_binary, s[v].n_integer, s[v].n_continuous, s[v].n_constraints)
                    assert got == (nb, ni, nc, nr), (v, G, T, TU, got)
                    checked += 1
    criterion_log(6, True, f"{checked} (variant, G, T, TU) combinations match the closed-form counts")


def test_c8_noise_plumbing(suite_runs, noise_runs, criterion_log):
    base, _ = suite_runs
    noisy, _ = noise_runs
    worst, n = 0.0, 0
    for row in noisy.rows:
        ref = base.cell(row.instance, row.reserve, VariantId.IUC)
        assert row.ok and ref.ok
        worst = max(worst, abs(row.objective - ref.objective) / abs(ref.objective))
        n += 1
    ok = n == SUITE_SIZE * len(RESERVES) and worst <= 0.05
    criterion_log(8, ok, f"{n} IUC cells with 1% cost noise, max relative change {worst:.3%}")
    assert ok


def test_c7_round_trip(tiny_runs, suite_runs, trap_runs, hull_runs, criterion_log, tmp_path):
    solves = [s for _, rec in (tiny_runs, suite_runs, trap_runs, hull_runs) for s in rec.solves]
    problems = []
    for s in solves:
        out = s.outcome
        if not out.status.has_point:
            problems.append(f"c{s.criterion}: {out.status.value} {out.message}")
            continue
        ev = evaluate_point(s.model, out.point)
        if ev.violations or ev.bound_violations or ev.integrality_violations:
            problems.append(f"c{s.criterion}: violated rows")
        if out.reported_objective is None or abs(out.reported_objective - ev.objective) > OBJ_RTOL * max(
            abs(ev.objective), 1.0
        ):
            problems.append(f"c{s.criterion}: objective {out.reported_objective!r} vs {ev.objective!r}")

    inst = with_reserve_fraction(generate_random_instance(GeneratorConfig(seed=0)), 0.05)
    for v in VariantId:
        model = build_formulation(inst, v)
        a, b = mps_text(model), mps_text(build_formulation(inst, v))
        if a != b:
            problems.append(f"MPS for {v.value} not deterministic")
        if mps_text(read_mps(a)).splitlines()[1:] != a.splitlines()[1:]:
            problems.append(f"MPS for {v.value} does not round-trip")

    ok = not problems
    criterion_log(7, ok, f"{len(solves)} solves re-evaluated, MPS writes byte-identical")
    assert ok, problems[:10]
