"""MPS export, external solver processes and solution parsing.

The bridge writes a model to an MPS file, runs a templated command in a
fresh temporary directory, reads the solution file back and re-evaluates it
against the model. Any solver that reads MPS and writes one of the supported
solution formats can be plugged in through the command template.

Solution formats
----------------
``plain``
    One ``name value`` pair per line. Optional directive lines ``=obj= v``,
    ``=status= s`` and ``=gap= g``; blank lines and ``#`` comments are
    skipped.
``columnar``
    A header line followed by one row per variable. The header is either
    ``<Status words> - objective value <v>`` (as written by CBC's
    ``-solu``) or any free text. Rows are ``[index] name value [extra ...]``:
    a leading integer index and any trailing columns (reduced costs) are
    ignored.
"""

from __future__ import annotations

import logging
import math
import os
import re
import shlex
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Mapping

from .milp import (
    FEAS_TOL,
    LinearConstraint,
    MilpModel,
    Sense,
    Variable,
    VarKind,
    assemble_model,
    evaluate_point,
    relax_integrality,
    to_matrix_form,
)

log = logging.getLogger(__name__)

OBJ_RTOL = 1e-5
ENV_SOLVER_CMD = "UCFLEX_SOLVER_CMD"
GRACE_SECONDS = 10.0

DEFAULT_COMMAND = (
    f"{shlex.quote(sys.executable)} -m ucflex.highs_runner {{model_path}} {{solution_path}}"
    " --gap {gap} --time-limit {timelimit}"
)


class SolutionParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


class ObjectiveMismatchError(ValueError):
    pass


class Status(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE_GAP = "feasible-gap"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"
    ERROR = "error"

    @property
    def has_point(self) -> bool:
        return self in (Status.OPTIMAL, Status.FEASIBLE_GAP)


@dataclass(frozen=True)
class SolverConfig:
    """How to run a solver.

    ``command`` is a shell-style template with ``{model_path}`` and
    ``{solution_path}`` (required) and optionally ``{gap}`` and
    ``{timelimit}``. ``command=None`` solves in-process with HiGHS instead
    of spawning a child; handy for the many tiny LPs of the oracle.
    """

    command: str | None = DEFAULT_COMMAND
    mip_gap: float = 1e-6
    time_limit: float = 600.0
    workdir: str | None = None
    solution_format: str = "plain"
    strict_fixed: bool = False
    keep_files: bool = False

    def __post_init__(self):
        if self.mip_gap < 0:
            raise ValueError("mip_gap must be >= 0")
        if not self.time_limit > 0:
            raise ValueError("time_limit must be > 0")
        if self.solution_format not in ("plain", "columnar"):
            raise ValueError(f"unknown solution format {self.solution_format!r}")
        if self.command is not None:
            for placeholder in ("{model_path}", "{solution_path}"):
                if placeholder not in self.command:
                    raise ValueError(f"solver command template lacks {placeholder}")

    @classmethod
    def from_env(cls, command: str | None = None, **kwargs) -> "SolverConfig":
        """Command from the argument, then ``$UCFLEX_SOLVER_CMD``, then the HiGHS runner."""
        command = command or os.environ.get(ENV_SOLVER_CMD) or DEFAULT_COMMAND
        return cls(command=command, **kwargs)

    @property
    def in_process(self) -> bool:
        return self.command is None


IN_PROCESS = SolverConfig(command=None)


@dataclass
class SolveOutcome:
    status: Status
    objective: float | None = None
    point: dict[str, float] | None = None
    gap: float | None = None
    wall_time: float = 0.0
    reported_objective: float | None = None
    message: str = ""
    violations: list = field(default_factory=list)


# --------------------------------------------------------------------------- MPS


def _num(x: float) -> str:
    return repr(float(x))


def _mps_names(model: MilpModel, strict_fixed: bool) -> tuple[dict[str, str], dict[str, str]]:
    if not strict_fixed:
        return {v.name: v.name for v in model.variables}, {c.name: c.name for c in model.constraints}
    cols = {v.name: f"C{i:07d}" for i, v in enumerate(model.variables)}
    rows = {c.name: f"R{i:07d}" for i, c in enumerate(model.constraints)}
    return cols, rows


def mps_text(model: MilpModel, strict_fixed: bool = False) -> str:
    """Fixed-layout MPS text.

    Long names are written with free spacing, which modern readers accept;
    ``strict_fixed`` renames columns and rows to 8-character ids instead
    (use :func:`mps_name_map` to translate back).
    """
    cols, rows = _mps_names(model, strict_fixed)
    name = "_".join(f"{k}={v}" for k, v in sorted(model.metadata.items())) or "model"
    name = re.sub(r"\s+", "_", name)
    out = [f"NAME          {name}", "ROWS", " N  COST"]
    sense_code = {Sense.LE: "L", Sense.EQ: "E", Sense.GE: "G"}
    for con in model.constraints:
        out.append(f" {sense_code[con.sense]}  {rows[con.name]}")

    entries: dict[str, list[tuple[str, float]]] = {v.name: [] for v in model.variables}
    for vname, coef in model.objective:
        if coef != 0.0:
            entries[vname].append(("COST", coef))
    for con in model.constraints:
        for vname, coef in con.terms:
            entries[vname].append((rows[con.name], coef))

    out.append("COLUMNS")
    in_int = False
    for var in model.variables:
        if var.is_integral != in_int:
            tag = "INTORG" if var.is_integral else "INTEND"
            out.append(f"    MARKER    'MARKER'                 '{tag}'")
            in_int = var.is_integral
        col = cols[var.name]
        items = entries[var.name] or [("COST", 0.0)]
        for row, coef in items:
            out.append(f"    {col:<8}  {row:<8}  {_num(coef)}")
    if in_int:
        out.append("    MARKER    'MARKER'                 'INTEND'")

    out.append("RHS")
    for con in model.constraints:
        if con.rhs != 0.0:
            out.append(f"    RHS       {rows[con.name]:<8}  {_num(con.rhs)}")

    out.append("BOUNDS")
    for var in model.variables:
        col = cols[var.name]
        lo, up = var.lower, var.upper
        if var.kind is VarKind.BINARY and lo == 0.0 and up == 1.0:
            out.append(f" BV BND       {col}")
            continue
        if var.is_integral:
            if lo == -math.inf:
                out.append(f" MI BND       {col}")
            else:
                out.append(f" LI BND       {col:<8}  {_num(lo)}")
            if up != math.inf:
                out.append(f" UI BND       {col:<8}  {_num(up)}")
            else:
                out.append(f" PL BND       {col}")
            continue
        if lo == -math.inf and up == math.inf:
            out.append(f" FR BND       {col}")
            continue
        if lo == -math.inf:
            out.append(f" MI BND       {col}")
        elif lo != 0.0 or up < 0.0:
            out.append(f" LO BND       {col:<8}  {_num(lo)}")
        if up != math.inf:
            out.append(f" UP BND       {col:<8}  {_num(up)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def mps_name_map(model: MilpModel, strict_fixed: bool = False) -> dict[str, str]:
    """MPS column name -> model variable name."""
    cols, _ = _mps_names(model, strict_fixed)
    return {v: k for k, v in cols.items()}


def write_mps(model: MilpModel, path: str | Path, strict_fixed: bool = False) -> Path:
    path = Path(path)
    path.write_text(mps_text(model, strict_fixed))
    return path


def read_mps(text: str) -> MilpModel:
    """Parse MPS as written by :func:`write_mps` (free spacing, no RANGES).

    Group and tag metadata are recovered from the naming conventions.
    """
    section = None
    senses: dict[str, Sense] = {}
    row_order: list[str] = []
    obj_row = None
    col_order: list[str] = []
    col_int: dict[str, bool] = {}
    coefs: dict[str, dict[str, float]] = {}
    objective: dict[str, float] = {}
    rhs: dict[str, float] = {}
    lower: dict[str, float] = {}
    upper: dict[str, float] = {}
    binary: set[str] = set()
    in_int = False
    name = "model"
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0].upper()
            if section == "NAME" and len(head) > 1:
                name = head[1]
            if section == "ENDATA":
                break
            continue
        tok = raw.split()
        try:
            if section == "ROWS":
                kind, row = tok
                if kind == "N":
                    obj_row = obj_row or row
                else:
                    senses[row] = {"L": Sense.LE, "E": Sense.EQ, "G": Sense.GE}[kind]
                    row_order.append(row)
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1].strip("'") == "MARKER":
                    in_int = tok[2].strip("'") == "INTORG"
                    continue
                col = tok[0]
                if col not in col_int:
                    col_order.append(col)
                    col_int[col] = in_int
                    coefs[col] = {}
                for row, val in zip(tok[1::2], tok[2::2]):
                    if row == obj_row:
                        if float(val) != 0.0:
                            objective[col] = float(val)
                    else:
                        coefs[col][row] = float(val)
            elif section == "RHS":
                for row, val in zip(tok[1::2], tok[2::2]):
                    rhs[row] = float(val)
            elif section == "BOUNDS":
                kind, col = tok[0], tok[2]
                val = float(tok[3]) if len(tok) > 3 else None
                if kind in ("LO", "LI"):
                    lower[col] = val
                elif kind in ("UP", "UI"):
                    upper[col] = val
                elif kind == "FX":
                    lower[col] = upper[col] = val
                elif kind == "FR":
                    lower[col], upper[col] = -math.inf, math.inf
                elif kind == "MI":
                    lower[col] = -math.inf
                elif kind == "PL":
                    upper[col] = math.inf
                elif kind == "BV":
                    binary.add(col)
                else:
                    raise ValueError(f"unsupported bound type {kind}")
            elif section == "RANGES":
                raise ValueError("RANGES are not supported")
        except (ValueError, KeyError, IndexError) as exc:
            raise SolutionParseError(f"bad MPS line {raw!r}: {exc}", lineno) from None

    variables = []
    for col in col_order:
        group = col.split("[", 1)[0]
        if col in binary:
            variables.append(Variable(col, VarKind.BINARY, 0.0, 1.0, group))
            continue
        kind = VarKind.INTEGER if col_int[col] else VarKind.CONTINUOUS
        variables.append(Variable(col, kind, lower.get(col, 0.0), upper.get(col, math.inf), group))

    row_terms: dict[str, list[tuple[str, float]]] = {r: [] for r in row_order}
    for col in col_order:
        for row, val in coefs[col].items():
            row_terms[row].append((col, val))
    constraints = [
        LinearConstraint(r, tuple(row_terms[r]), senses[r], rhs.get(r, 0.0), r.split("_", 1)[0])
        for r in row_order
    ]
    return assemble_model(variables, constraints, objective, {"name": name})


# --------------------------------------------------------------------------- solutions


@dataclass
class ParsedSolution:
    point: dict[str, float]
    objective: float
    reported_objective: float | None = None
    status: str | None = None
    gap: float | None = None
    warnings: list[str] = field(default_factory=list)


def _float(text: str, lineno: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise SolutionParseError(f"cannot read number {text!r}", lineno) from None


def _read_plain(text: str):
    pairs, directives = [], {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if len(tok) != 2:
            raise SolutionParseError(f"expected 'name value', got {line!r}", lineno)
        if tok[0].startswith("=") and tok[0].endswith("="):
            key = tok[0].strip("=")
            directives[key] = tok[1] if key == "status" else _float(tok[1], lineno)
        else:
            pairs.append((tok[0], _float(tok[1], lineno)))
    return pairs, directives


_HEADER_RE = re.compile(r"^(?P<status>.*?)\s*-\s*objective value\s+(?P<obj>\S+)", re.IGNORECASE)


def _read_columnar(text: str):
    lines = text.splitlines()
    directives = {}
    start = 0
    while start < len(lines) and not lines[start].strip():
        start += 1
    if start < len(lines):
        header = lines[start].strip()
        m = _HEADER_RE.match(header)
        if m:
            directives["status"] = m.group("status").strip().lower()
            directives["obj"] = _float(m.group("obj"), start + 1)
        else:
            directives["status"] = header.lower()
    pairs = []
    for lineno, raw in enumerate(lines[start + 1:], start + 2):
        tok = raw.replace("**", " ").split()
        if not tok:
            continue
        if len(tok) >= 3 and re.fullmatch(r"\d+", tok[0]):
            tok = tok[1:]
        if len(tok) < 2:
            raise SolutionParseError(f"expected '[index] name value', got {raw.strip()!r}", lineno)
        pairs.append((tok[0], _float(tok[1], lineno)))
    return pairs, directives


def parse_solution(
    text: str,
    fmt: str,
    model: MilpModel,
    name_map: Mapping[str, str] | None = None,
) -> ParsedSolution:
    """Read a solution file and re-evaluate it on ``model``.

    Unknown names are skipped and absent variables default to 0 (both with a
    logged warning). Raises :class:`SolutionParseError` with the line number
    on unreadable input and :class:`ObjectiveMismatchError` when the file's
    own objective is more than 1e-5 (relative) away from the recomputed one.
    """
    if fmt == "plain":
        pairs, directives = _read_plain(text)
    elif fmt == "columnar":
        pairs, directives = _read_columnar(text)
    else:
        raise ValueError(f"unknown solution format {fmt!r}")

    warnings = []
    point: dict[str, float] = {}
    for name, value in pairs:
        name = name_map.get(name, name) if name_map else name
        if name not in model.index:
            warnings.append(f"unknown variable {name!r} ignored")
            continue
        point[name] = value
    status = directives.get("status")
    if pairs or status in (None, "optimal"):
        missing = [v.name for v in model.variables if v.name not in point]
        if missing:
            warnings.append(f"{len(missing)} variables missing from solution, set to 0 (first: {missing[0]})")
            for name in missing:
                point[name] = 0.0
    for w in warnings:
        log.warning(w)

    reported = directives.get("obj")
    objective = evaluate_point(model, point).objective if point else math.nan
    if reported is not None and point:
        if abs(reported - objective) > OBJ_RTOL * max(abs(objective), 1.0):
            raise ObjectiveMismatchError(
                f"solver objective {reported!r} differs from recomputed {objective!r}"
            )
    return ParsedSolution(point, objective, reported, status, directives.get("gap"), warnings)


# --------------------------------------------------------------------------- processes


@dataclass
class SolverRun:
    command: list[str]
    returncode: int | None
    stdout: str
    stderr: str
    wall_time: float
    timed_out: bool = False
    error: str = ""


def render_command(cfg: SolverConfig, model_path: Path, solution_path: Path) -> list[str]:
    values = {
        "model_path": str(model_path),
        "solution_path": str(solution_path),
        "gap": repr(cfg.mip_gap),
        "timelimit": repr(float(cfg.time_limit)),
    }
    return [tok.format(**values) for tok in shlex.split(cfg.command)]


def invoke_solver(cfg: SolverConfig, model_path: str | Path, solution_path: str | Path) -> SolverRun:
    """Run the templated command; kill it after ``time_limit`` plus a grace period."""
    argv = render_command(cfg, Path(model_path), Path(solution_path))
    start = time.perf_counter()
    try:
        proc = subprocess.run(
            argv,
            capture_output=True,
            text=True,
            timeout=cfg.time_limit + GRACE_SECONDS,
            cwd=Path(model_path).parent,
        )
    except FileNotFoundError as exc:
        return SolverRun(argv, None, "", "", time.perf_counter() - start, error=f"executable not found: {exc}")
    except PermissionError as exc:
        return SolverRun(argv, None, "", "", time.perf_counter() - start, error=str(exc))
    except subprocess.TimeoutExpired as exc:
        out = exc.stdout.decode() if isinstance(exc.stdout, bytes) else (exc.stdout or "")
        err = exc.stderr.decode() if isinstance(exc.stderr, bytes) else (exc.stderr or "")
        return SolverRun(argv, None, out, err, time.perf_counter() - start, timed_out=True)
    return SolverRun(argv, proc.returncode, proc.stdout, proc.stderr, time.perf_counter() - start)


_STATUS_WORDS = (
    ("infeasible", Status.INFEASIBLE),
    ("unbounded", Status.ERROR),
    ("optimal", Status.OPTIMAL),
    ("time", Status.FEASIBLE_GAP),
    ("stopped", Status.FEASIBLE_GAP),
    ("feasible", Status.FEASIBLE_GAP),
    ("gap", Status.FEASIBLE_GAP),
    ("error", Status.ERROR),
)


def _status_from_text(text: str | None) -> Status | None:
    if not text:
        return None
    text = text.lower()
    for word, status in _STATUS_WORDS:
        if word in text:
            return status
    return None


def _finish(model: MilpModel, outcome: SolveOutcome) -> SolveOutcome:
    """Re-evaluate a returned point; any violation turns the outcome into an error."""
    if not outcome.status.has_point or outcome.point is None:
        outcome.point = None
        return outcome
    ev = evaluate_point(model, outcome.point, FEAS_TOL)
    outcome.objective = ev.objective
    bad = ev.violations + ev.integrality_violations + ev.bound_violations
    if bad:
        outcome.violations = bad
        outcome.status = Status.ERROR
        outcome.message = f"returned point violates {len(bad)} rows/bounds (first: {bad[0]})"
        outcome.point = None
    return outcome


def _solve_in_process(model: MilpModel, cfg: SolverConfig) -> SolveOutcome:
    from .highs_runner import solve_matrix

    form = to_matrix_form(model)
    start = time.perf_counter()
    sol = solve_matrix(form, gap=cfg.mip_gap, time_limit=cfg.time_limit)
    wall = time.perf_counter() - start
    status = {
        "optimal": Status.OPTIMAL,
        "timelimit": Status.FEASIBLE_GAP if sol.x is not None else Status.TIMEOUT,
        "infeasible": Status.INFEASIBLE,
    }.get(sol.status, Status.ERROR)
    point = None if sol.x is None else {n: float(v) for n, v in zip(form.names, sol.x)}
    outcome = SolveOutcome(status, point=point, gap=sol.gap, wall_time=wall,
                           reported_objective=sol.objective, message=sol.message)
    return _finish(model, outcome)


def solve_model(model: MilpModel, cfg: SolverConfig | None = None, relaxed: bool = False) -> SolveOutcome:
    """Write, solve, read back and verify ``model``.

    ``relaxed`` solves the LP relaxation. The outcome's objective is always
    the one recomputed from the returned point.
    """
    cfg = cfg or SolverConfig.from_env()
    if relaxed:
        model = relax_integrality(model)
    if cfg.in_process:
        return _solve_in_process(model, cfg)

    base = Path(cfg.workdir) if cfg.workdir else None
    if base is not None:
        base.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix="ucflex-", dir=base))
    try:
        model_path = write_mps(model, tmp / "model.mps", strict_fixed=cfg.strict_fixed)
        solution_path = tmp / "solution.txt"
        run = invoke_solver(cfg, model_path, solution_path)
        if run.error:
            return SolveOutcome(Status.ERROR, wall_time=run.wall_time, message=run.error)

        text = solution_path.read_text() if solution_path.exists() else None
        if run.timed_out and not text:
            return SolveOutcome(Status.TIMEOUT, wall_time=run.wall_time, message="solver killed at time limit")
        if text is None:
            status = _status_from_text(run.stdout)
            if status is Status.INFEASIBLE:
                return SolveOutcome(status, wall_time=run.wall_time, message=run.stdout.strip())
            return SolveOutcome(
                Status.ERROR,
                wall_time=run.wall_time,
                message=f"exit {run.returncode} without solution file: {run.stderr.strip()[-2000:]}",
            )

        name_map = mps_name_map(model, True) if cfg.strict_fixed else None
        try:
            parsed = parse_solution(text, cfg.solution_format, model, name_map)
        except (SolutionParseError, ObjectiveMismatchError) as exc:
            return SolveOutcome(Status.ERROR, wall_time=run.wall_time, message=str(exc))

        status = _status_from_text(parsed.status)
        if status is None:
            status = Status.OPTIMAL if run.returncode == 0 else Status.ERROR
        if status is Status.OPTIMAL and run.returncode not in (0, None):
            status = Status.ERROR
        outcome = SolveOutcome(
            status,
            point=parsed.point if status.has_point else None,
            gap=parsed.gap,
            wall_time=run.wall_time,
            reported_objective=parsed.reported_objective,
            message=(run.stderr.strip()[-2000:] if status is Status.ERROR else ""),
        )
        return _finish(model, outcome)
    finally:
        if not cfg.keep_files:
            shutil.rmtree(tmp, ignore_errors=True)
