"""Stand-alone MPS solver process built on HiGHS (through scipy).

Usage::

    python -m ucflex.highs_runner MODEL.mps SOLUTION.txt [--gap G] [--time-limit S]

Reads a model written by :func:`ucflex.solver_bridge.write_mps`, solves it and
writes the plain-pairs solution format::

    =status= optimal
    =obj= 1234.5
    =gap= 0.0
    u[c1][1] 2.0
    ...

``=status=`` is one of ``optimal``, ``timelimit``, ``infeasible``,
``unbounded`` or ``error``; only the first two are followed by a point.
This is the default child process of the bridge, but any solver that reads
MPS and writes either supported solution format can replace it.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .milp import MatrixForm


@dataclass
class MatrixSolution:
    status: str
    x: np.ndarray | None
    objective: float | None
    gap: float | None
    message: str = ""


def polish(form: MatrixForm, x: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Round the integer columns of ``x``, fix them and re-optimise the rest.

    HiGHS accepts integer values a few 1e-7 away from an integer; multiplied
    by a large capacity, that slack is enough to break a row once the values
    are rounded. Re-solving the continuous part with exact integers removes
    it. Returns None when the rounded commitment admits no dispatch.
    """
    integral = form.integrality > 0
    if not integral.any():
        return None
    fixed = np.round(x[integral])
    lb, ub = form.lb.copy(), form.ub.copy()
    lb[integral] = ub[integral] = fixed
    constraints = ()
    if form.A.shape[0]:
        constraints = LinearConstraint(form.A, form.row_lo, form.row_hi)
    res = milp(form.c, bounds=Bounds(lb, ub), constraints=constraints, options={"presolve": True})
    if res.status != 0:
        return None
    out = np.asarray(res.x, dtype=float)
    out[integral] = fixed
    return out, float(form.c @ out)


def solve_matrix(form: MatrixForm, gap: float = 1e-6, time_limit: float | None = None) -> MatrixSolution:
    options = {"mip_rel_gap": gap, "presolve": True}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    constraints = ()
    if form.A.shape[0]:
        constraints = LinearConstraint(form.A, form.row_lo, form.row_hi)
    res = milp(
        form.c,
        integrality=form.integrality,
        bounds=Bounds(form.lb, form.ub),
        constraints=constraints,
        options=options,
    )
    achieved = getattr(res, "mip_gap", None)
    if achieved is None or not np.isfinite(achieved):
        achieved = 0.0
    if res.status in (0, 1) and res.x is not None:
        x, fun = res.x, float(res.fun)
        cleaned = polish(form, x)
        if cleaned is not None:
            x, fun = cleaned
        status = "optimal" if res.status == 0 else "timelimit"
        return MatrixSolution(status, x, fun, float(achieved), res.message)
    if res.status == 1:
        return MatrixSolution("timelimit", None, None, None, res.message)
    if res.status == 2:
        return MatrixSolution("infeasible", None, None, None, res.message)
    if res.status == 3:
        return MatrixSolution("unbounded", None, None, None, res.message)
    return MatrixSolution("error", None, None, None, res.message)


def format_plain(names, sol: MatrixSolution) -> str:
    lines = [f"=status= {sol.status}"]
    if sol.x is not None:
        lines.append(f"=obj= {sol.objective!r}")
        lines.append(f"=gap= {sol.gap!r}")
        lines += [f"{name} {float(v)!r}" for name, v in zip(names, sol.x)]
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    from .milp import to_matrix_form
    from .solver_bridge import read_mps

    parser = argparse.ArgumentParser(prog="python -m ucflex.highs_runner")
    parser.add_argument("model")
    parser.add_argument("solution")
    parser.add_argument("--gap", type=float, default=1e-6)
    parser.add_argument("--time-limit", type=float, default=None)
    args = parser.parse_args(argv)

    model = read_mps(Path(args.model).read_text())
    form = to_matrix_form(model)
    sol = solve_matrix(form, gap=args.gap, time_limit=args.time_limit)
    Path(args.solution).write_text(format_plain(form.names, sol))
    print(f"status: {sol.status}")
    if sol.objective is not None:
        print(f"objective: {sol.objective!r}")
    return 0 if sol.status != "error" else 1


if __name__ == "__main__":
    sys.exit(main())
