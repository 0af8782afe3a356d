"""Command-line entry point: ``ucflex gen | solve | compare | oracle | check``.

Exit codes: 0 success, 1 usage error, 2 solver error, 3 validation or
feasibility failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .formulation import VariantId, build_formulation, check_schedule_feasibility, extract_schedule
from .harness import ExperimentPlan, default_suite, emit_report, run_experiment
from .instance import (
    ConfigError,
    GeneratorConfig,
    InstanceError,
    generate_random_instance,
    load_instance,
    serialize_instance,
)
from .milp import evaluate_point
from .oracle import OracleSizeError, OracleSolveError, brute_force_optimum
from .solver_bridge import (
    SolutionParseError,
    SolverConfig,
    Status,
    ObjectiveMismatchError,
    parse_solution,
    solve_model,
)

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_INVALID = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _variant(text: str) -> VariantId:
    try:
        return VariantId.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--solver-cmd", help="command template with {model_path} and {solution_path}")
    p.add_argument("--mip-gap", type=float, default=1e-6)
    p.add_argument("--time-limit", type=float, default=600.0, help="seconds")
    p.add_argument("--solution-format", choices=("plain", "columnar"), default="plain")


def _solver(args) -> SolverConfig:
    try:
        return SolverConfig.from_env(
            args.solver_cmd,
            mip_gap=args.mip_gap,
            time_limit=args.time_limit,
            solution_format=args.solution_format,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ucflex", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a random instance as JSON")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--clusters", type=int, default=3)
    g.add_argument("--units", type=int, default=3, help="units per cluster")
    g.add_argument("--horizon", type=int, default=24)
    g.add_argument("--reserve-fraction", type=float, default=0.05)
    g.add_argument("--peak-to-base", type=float, default=1.8)
    g.add_argument("--renewable-share", type=float, default=0.0)
    g.add_argument("--out", help="output file (default: stdout)")

    s = sub.add_parser("solve", help="solve one variant of one instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--variant", type=_variant, required=True)
    s.add_argument("--relaxed", action="store_true", help="solve the LP relaxation")
    s.add_argument("--iuc-noise-pct", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0, help="noise seed")
    s.add_argument("--out", help="write the solution (name value pairs) here")
    _add_solver_flags(s)

    c = sub.add_parser("compare", help="run a variant matrix and print a report")
    c.add_argument(
        "--instances", nargs="+", required=True,
        help="instance files, or suite:N for N generated instances seeded from --seed",
    )
    c.add_argument("--variants", nargs="+", type=_variant, default=list(VariantId))
    c.add_argument("--reserve-levels", nargs="+", type=float, help="fractions of demand, e.g. 0.05 0.1")
    c.add_argument("--format", choices=("csv", "markdown"), default="csv")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--repetitions", type=int, default=1)
    c.add_argument("--iuc-noise-pct", type=float, default=0.0)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", help="write the report here (default: stdout)")
    _add_solver_flags(c)

    o = sub.add_parser("oracle", help="brute-force IUC optimum of a tiny instance")
    o.add_argument("--instance", required=True)

    k = sub.add_parser("check", help="verify a solution file against an instance and variant")
    k.add_argument("--instance", required=True)
    k.add_argument("--variant", type=_variant, required=True)
    k.add_argument("--solution", required=True)
    k.add_argument("--solution-format", choices=("plain", "columnar"), default="plain")
    return parser


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(path: str):
    if not Path(path).exists():
        raise UsageError(f"no such instance file: {path}")
    return load_instance(path)


def cmd_gen(args) -> int:
    cfg = GeneratorConfig(
        seed=args.seed,
        n_clusters=args.clusters,
        units_per_cluster=args.units,
        horizon=args.horizon,
        reserve_fraction=args.reserve_fraction,
        peak_to_base=args.peak_to_base,
        renewable_share=args.renewable_share,
    )
    _write(serialize_instance(generate_random_instance(cfg)), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    instance = _load(args.instance)
    cfg = _solver(args)
    noise = args.iuc_noise_pct / 100
    if noise and args.variant is not VariantId.IUC:
        raise UsageError("--iuc-noise-pct applies to IUC only")
    model = build_formulation(instance, args.variant, cost_noise=noise, noise_seed=args.seed)
    out = solve_model(model, cfg, relaxed=args.relaxed)
    summary = {
        "variant": args.variant.value,
        "status": out.status.value,
        "objective": out.objective,
        "gap": out.gap,
        "runtime_s": round(out.wall_time, 6),
    }
    if out.message and not out.status.has_point:
        summary["message"] = out.message
    if not out.status.has_point:
        print(json.dumps(summary))
        return EXIT_SOLVER

    if not args.relaxed:
        found = check_schedule_feasibility(instance, args.variant, extract_schedule(instance, args.variant, out.point))
        summary["findings"] = len(found)
        if found:
            summary["message"] = f"schedule check failed: {found[0]}"
    if args.out:
        lines = [f"=status= {out.status.value}", f"=obj= {out.objective!r}"]
        lines += [f"{name} {value!r}" for name, value in out.point.items()]
        Path(args.out).write_text("\n".join(lines) + "\n")
    print(json.dumps(summary))
    return EXIT_INVALID if summary.get("findings") else EXIT_OK


def _instances(args) -> list:
    sources = []
    for item in args.instances:
        if item.startswith("suite:"):
            try:
                n = int(item.split(":", 1)[1])
            except ValueError:
                raise UsageError(f"bad suite spec {item!r}") from None
            sources += default_suite(n, seed0=args.seed)
        else:
            sources.append((Path(item).stem, _load(item)))
    return sources


def cmd_compare(args) -> int:
    try:
        plan = ExperimentPlan(
            instances=_instances(args),
            variants=args.variants,
            reserve_levels=args.reserve_levels,
            solver=_solver(args),
            repetitions=args.repetitions,
            workers=args.workers,
            iuc_noise_pct=args.iuc_noise_pct,
            noise_seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_experiment(plan)
    _write(emit_report(report, args.format), args.out)
    failed = report.failed
    if any(r.findings for r in failed):
        return EXIT_INVALID
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_oracle(args) -> int:
    instance = _load(args.instance)
    try:
        res = brute_force_optimum(instance)
    except OracleSizeError as exc:
        raise UsageError(str(exc)) from None
    except OracleSolveError as exc:
        print(json.dumps({"status": "error", "message": str(exc)}))
        return EXIT_SOLVER
    print(json.dumps({
        "objective": res.objective,
        "patterns_visited": res.n_patterns,
        "patterns_total": res.n_raw,
        "commitment": dict(zip(res.pattern.units, res.pattern.as_strings())),
    }))
    return EXIT_OK


def cmd_check(args) -> int:
    instance = _load(args.instance)
    model = build_formulation(instance, args.variant)
    if not Path(args.solution).exists():
        raise UsageError(f"no such solution file: {args.solution}")
    try:
        parsed = parse_solution(Path(args.solution).read_text(), args.solution_format, model)
    except (SolutionParseError, ObjectiveMismatchError) as exc:
        print(json.dumps({"feasible": False, "message": str(exc)}))
        return EXIT_INVALID
    ev = evaluate_point(model, parsed.point)
    findings = []
    try:
        schedule = extract_schedule(instance, args.variant, parsed.point)
        findings = [str(f) for f in check_schedule_feasibility(instance, args.variant, schedule)]
    except ValueError as exc:
        findings.append(str(exc))
    rows = [f"{name}: {amount:.6g}" for name, amount in ev.violations + ev.bound_violations + ev.integrality_violations]
    result = {"feasible": not rows and not findings, "objective": ev.objective, "violated_rows": rows[:50],
              "findings": findings[:50]}
    print(json.dumps(result))
    return EXIT_OK if result["feasible"] else EXIT_INVALID


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "compare": cmd_compare, "oracle": cmd_oracle, "check": cmd_check}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ucflex {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"ucflex {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InstanceError as exc:
        print(f"ucflex {args.command}: invalid instance: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
