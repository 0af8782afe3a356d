"""Variant-comparison experiments and their reports.

An :class:`ExperimentPlan` lists instances, variants and reserve levels; every
(instance, reserve) pair is one *cell group* whose IUC solve anchors the
objective errors of the other variants. Cell groups may run on a thread pool,
but the report rows always come back in plan order.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

from .formulation import (
    VariantId,
    build_formulation,
    check_schedule_feasibility,
    extract_schedule,
)
from .instance import GeneratorConfig, SystemInstance, generate_random_instance, load_instance, with_reserve_fraction
from .milp import model_statistics
from .solver_bridge import SolverConfig, Status, solve_model

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "instance",
    "reserve",
    "variant",
    "objective",
    "error_vs_iuc",
    "runtime_s",
    "gap",
    "n_binary",
    "n_integer",
    "n_continuous",
    "n_constraints",
    "n_nonzeros",
)

InstanceSource = Union[str, Path, GeneratorConfig, tuple[str, SystemInstance]]


def resolve_instance(source: InstanceSource) -> tuple[str, SystemInstance]:
    """A (name, instance) pair from a path, a generator config or a ready pair."""
    if isinstance(source, tuple):
        return source
    if isinstance(source, GeneratorConfig):
        return f"gen-s{source.seed}", generate_random_instance(source)
    path = Path(source)
    return path.stem, load_instance(path)


@dataclass
class ExperimentPlan:
    instances: Sequence[InstanceSource]
    variants: Sequence[VariantId] = tuple(VariantId)
    reserve_levels: Sequence[float] | None = None
    solver: SolverConfig = field(default_factory=SolverConfig.from_env)
    repetitions: int = 1
    workers: int = 1
    iuc_noise_pct: float = 0.0
    noise_seed: int = 0
    output: str | None = None

    def __post_init__(self):
        if not self.instances:
            raise ValueError("plan needs at least one instance")
        if not self.variants:
            raise ValueError("plan needs at least one variant")
        self.variants = tuple(VariantId.parse(v) if isinstance(v, str) else v for v in self.variants)
        if self.reserve_levels is not None and any(r < 0 for r in self.reserve_levels):
            raise ValueError("reserve fractions must be >= 0")
        if self.repetitions < 1 or self.workers < 1:
            raise ValueError("repetitions and workers must be >= 1")
        if self.iuc_noise_pct < 0:
            raise ValueError("iuc_noise_pct must be >= 0")


@dataclass
class CellResult:
    instance: str
    reserve: float | None
    variant: VariantId
    status: Status
    objective: float | None
    error_vs_iuc: float | None
    runtime_s: float
    gap: float | None
    n_binary: int
    n_integer: int
    n_continuous: int
    n_constraints: int
    n_nonzeros: int
    objectives: list[float] = field(default_factory=list)
    findings: int = 0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status.has_point and self.findings == 0


@dataclass
class ExperimentReport:
    rows: list[CellResult] = field(default_factory=list)

    def cell(self, instance: str, reserve: float | None, variant: VariantId | str) -> CellResult:
        variant = VariantId.parse(variant) if isinstance(variant, str) else variant
        for row in self.rows:
            if row.instance == instance and row.reserve == reserve and row.variant is variant:
                return row
        raise KeyError((instance, reserve, variant))

    def errors(self, variant: VariantId | str) -> list[float]:
        variant = VariantId.parse(variant) if isinstance(variant, str) else variant
        return [r.error_vs_iuc for r in self.rows if r.variant is variant and r.error_vs_iuc is not None]

    def mean_error(self, variant: VariantId | str) -> float:
        errs = self.errors(variant)
        return statistics.fmean(errs) if errs else math.nan

    @property
    def failed(self) -> list[CellResult]:
        return [r for r in self.rows if not r.ok]


def _solve_cell(
    name: str,
    instance: SystemInstance,
    reserve: float | None,
    variant: VariantId,
    plan: ExperimentPlan,
) -> CellResult:
    noise = plan.iuc_noise_pct / 100 if variant is VariantId.IUC else 0.0
    model = build_formulation(instance, variant, cost_noise=noise, noise_seed=plan.noise_seed)
    stats = model_statistics(model)
    objectives, runtimes = [], []
    outcome = None
    for _ in range(plan.repetitions):
        outcome = solve_model(model, plan.solver)
        runtimes.append(max(outcome.wall_time, 1e-9))
        if outcome.objective is not None:
            objectives.append(outcome.objective)

    findings, message = 0, outcome.message
    if outcome.status.has_point:
        schedule = extract_schedule(instance, variant, outcome.point)
        found = check_schedule_feasibility(instance, variant, schedule)
        findings = len(found)
        if found:
            message = f"schedule check failed: {found[0]}"
            log.warning("%s/%s/%s: %s", name, reserve, variant.value, message)
    else:
        log.warning("%s/%s/%s: %s %s", name, reserve, variant.value, outcome.status.value, message)

    return CellResult(
        instance=name,
        reserve=reserve,
        variant=variant,
        status=outcome.status,
        objective=outcome.objective if outcome.status.has_point else None,
        error_vs_iuc=None,
        runtime_s=statistics.fmean(runtimes),
        gap=outcome.gap,
        n_binary=stats.n_binary,
        n_integer=stats.n_integer,
        n_continuous=stats.n_continuous,
        n_constraints=stats.n_constraints,
        n_nonzeros=stats.n_nonzeros,
        objectives=objectives,
        findings=findings,
        message=message,
    )


def _run_group(name: str, instance: SystemInstance, reserve: float | None, plan: ExperimentPlan) -> list[CellResult]:
    if reserve is not None:
        instance = with_reserve_fraction(instance, reserve)
    # IUC goes first: it anchors the errors of the group
    order = sorted(plan.variants, key=lambda v: v is not VariantId.IUC)
    results = {v: _solve_cell(name, instance, reserve, v, plan) for v in order}

    anchor = results.get(VariantId.IUC)
    base = anchor.objective if anchor is not None and anchor.ok else None
    for variant, cell in results.items():
        if base is None or not cell.ok:
            continue
        if variant is VariantId.IUC:
            cell.error_vs_iuc = 0.0
        elif base == 0:
            cell.error_vs_iuc = 0.0 if abs(cell.objective) <= 1e-9 else math.nan
        else:
            cell.error_vs_iuc = (base - cell.objective) / base
    return [results[v] for v in plan.variants]


def run_experiment(plan: ExperimentPlan) -> ExperimentReport:
    """Solve every (instance, reserve, variant) cell of ``plan``.

    A failing cell (solver error, or a schedule the independent checker
    rejects) is recorded with its status and the run carries on. Without a
    usable IUC solve the group's errors stay ``None``.
    """
    named = [resolve_instance(src) for src in plan.instances]
    levels = list(plan.reserve_levels) if plan.reserve_levels is not None else [None]
    groups = [(name, inst, r) for name, inst in named for r in levels]

    if plan.workers == 1:
        parts = [_run_group(name, inst, r, plan) for name, inst, r in groups]
    else:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            parts = list(pool.map(lambda g: _run_group(g[0], g[1], g[2], plan), groups))
    report = ExperimentReport([row for part in parts for row in part])
    if plan.output:
        fmt = "markdown" if str(plan.output).endswith(".md") else "csv"
        Path(plan.output).write_text(emit_report(report, fmt))
    return report


# --------------------------------------------------------------------------- output


def _fmt_number(x: float | None) -> str:
    if x is None:
        return "unavailable"
    return repr(float(x))


def _csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in report.rows:
        writer.writerow(
            [
                r.instance,
                "" if r.reserve is None else repr(r.reserve),
                r.variant.value,
                "" if r.objective is None else repr(r.objective),
                _fmt_number(r.error_vs_iuc),
                repr(round(r.runtime_s, 6)),
                "" if r.gap is None else repr(r.gap),
                r.n_binary,
                r.n_integer,
                r.n_continuous,
                r.n_constraints,
                r.n_nonzeros,
            ]
        )
    return buf.getvalue()


def format_percent(x: float | None) -> str:
    """0.0072 -> '0.72%'."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "n/a"
    return f"{100 * x:.2f}%"


def _markdown(report: ExperimentReport) -> str:
    out = []
    instances = list(dict.fromkeys(r.instance for r in report.rows))
    for name in instances:
        rows = [r for r in report.rows if r.instance == name]
        variants = list(dict.fromkeys(r.variant for r in rows))
        out.append(f"### {name}\n")
        out.append("| Reserve | Result | " + " | ".join(v.value for v in variants) + " |")
        out.append("|---|---|" + "---|" * len(variants))
        for reserve in dict.fromkeys(r.reserve for r in rows):
            cells = {r.variant: r for r in rows if r.reserve == reserve}
            label = "as given" if reserve is None else format_percent(reserve)

            def line(title, fn):
                vals = [fn(cells[v]) if v in cells else "" for v in variants]
                return f"| {label} | {title} | " + " | ".join(vals) + " |"

            out.append(line("O.f.", lambda c: "failed" if c.objective is None else f"{c.objective:,.2f}"))
            out.append(line("O.f. Error", lambda c: format_percent(c.error_vs_iuc)))
            out.append(line("Rtime [s]", lambda c: f"{c.runtime_s:.2f}"))
        out.append("")
    return "\n".join(out)


def emit_report(report: ExperimentReport, fmt: str = "csv") -> str:
    if fmt == "csv":
        return _csv(report)
    if fmt == "markdown":
        return _markdown(report)
    raise ValueError(f"unknown report format {fmt!r}")


def default_suite(
    n_instances: int = 20, seed0: int = 0, **overrides
) -> list[GeneratorConfig]:
    """Generator configs for the standard comparison suite (3 clusters of 3 units, T=24)."""
    return [GeneratorConfig(seed=seed0 + k, **overrides) for k in range(n_instances)]


def relaxation_order_violations(report: ExperimentReport, rel_gap: float) -> list[str]:
    """Groups where a CCUC optimum exceeds a slotted variant's beyond 2*gap*|PCUC|."""
    bad = []
    groups = dict.fromkeys((r.instance, r.reserve) for r in report.rows)
    for inst, reserve in groups:
        try:
            ccuc = report.cell(inst, reserve, VariantId.CCUC).objective
            pcuc = report.cell(inst, reserve, VariantId.PCUC).objective
        except KeyError:
            continue
        if ccuc is None or pcuc is None:
            continue
        tol = 2 * rel_gap * abs(pcuc)
        for v in (VariantId.PCUC_S, VariantId.PCUC_R, VariantId.PCUC):
            try:
                obj = report.cell(inst, reserve, v).objective
            except KeyError:
                continue
            if obj is not None and ccuc > obj + tol:
                bad.append(f"{inst}@{reserve}: CCUC {ccuc!r} > {v.value} {obj!r}")
        for v in (VariantId.PCUC_S, VariantId.PCUC_R):
            try:
                obj = report.cell(inst, reserve, v).objective
            except KeyError:
                continue
            if obj is not None and obj > pcuc + tol:
                bad.append(f"{inst}@{reserve}: {v.value} {obj!r} > PCUC {pcuc!r}")
    return bad


def iter_cells(report: ExperimentReport, variant: VariantId | None = None) -> Iterable[CellResult]:
    return (r for r in report.rows if variant is None or r.variant is variant)
