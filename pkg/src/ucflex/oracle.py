"""Brute-force IUC optimum for tiny instances.

Every on/off matrix that respects minimum up/down times is enumerated; each
one pins the integer variables of the IUC model and the remaining dispatch
LP is solved through the solver bridge. Units of one cluster that share their
initial state are interchangeable, so only one representative per multiset of
unit schedules is visited.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .formulation import VariantId, build_formulation, unit_clusters, var_name
from .instance import ClusterSpec, SystemInstance
from .milp import fix_variables
from .solver_bridge import IN_PROCESS, SolverConfig, Status, solve_model

MAX_UNITS = 4
MAX_PERIODS = 8


class OracleSizeError(ValueError):
    pass


class OracleSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class CommitmentPattern:
    units: tuple[str, ...]
    on: np.ndarray  # (n_units, T) of 0/1
    multiplicity: int = 1
    initial: tuple[int, ...] = ()

    @property
    def startups(self) -> np.ndarray:
        prev = np.concatenate([np.array(self.initial)[:, None], self.on[:, :-1]], axis=1)
        return np.maximum(self.on - prev, 0)

    @property
    def shutdowns(self) -> np.ndarray:
        prev = np.concatenate([np.array(self.initial)[:, None], self.on[:, :-1]], axis=1)
        return np.maximum(prev - self.on, 0)

    def as_strings(self) -> tuple[str, ...]:
        return tuple("".join(str(int(v)) for v in row) for row in self.on)


def unit_schedules(unit: ClusterSpec, T: int) -> list[tuple[int, ...]]:
    """All on/off sequences one unit can follow, given its min up/down times.

    A startup at t needs the unit on through t + TU - 1 (or the horizon end);
    a shutdown at t needs it off through t + TD - 1. The initial state imposes
    no carried-over window.
    """
    out = []
    for bits in itertools.product((0, 1), repeat=T):
        prev = unit.init_online
        ok = True
        for t, state in enumerate(bits):
            if state != prev:
                hold = unit.min_up if state else unit.min_down
                if any(bits[k] != state for k in range(t, min(t + hold, T))):
                    ok = False
                    break
            prev = state
        if ok:
            out.append(bits)
    return out


def _check_size(instance: SystemInstance) -> None:
    if instance.n_units > MAX_UNITS or instance.horizon > MAX_PERIODS:
        raise OracleSizeError(
            f"oracle is limited to {MAX_UNITS} units and {MAX_PERIODS} periods "
            f"(got {instance.n_units} units, T={instance.horizon})"
        )


def enumerate_commitment_patterns(
    instance: SystemInstance, prune: bool = True
) -> Iterator[CommitmentPattern]:
    """Yield every feasible commitment matrix of the instance's units.

    With ``prune`` interchangeable units (same cluster, same initial on/off
    state and output) are enumerated as multisets, each pattern carrying the
    number of raw matrices it stands for.
    """
    _check_size(instance)
    T = instance.horizon
    units = unit_clusters(instance)
    ids = tuple(u.id for u in units)
    initial = tuple(u.init_online for u in units)

    groups: dict[tuple, list[int]] = {}
    for k, u in enumerate(units):
        key = (u.id.rsplit(".", 1)[0], u.init_online, u.init_power_above_min) if prune else (u.id,)
        groups.setdefault(key, []).append(k)

    per_group = []
    for members in groups.values():
        choices = unit_schedules(units[members[0]], T)
        options = []
        for combo in itertools.combinations_with_replacement(range(len(choices)), len(members)):
            counts = Counter(combo).values()
            mult = math.factorial(len(members)) // math.prod(math.factorial(c) for c in counts)
            options.append(([choices[i] for i in combo], mult))
        per_group.append((members, options))

    for picks in itertools.product(*(opts for _, opts in per_group)):
        on = np.zeros((len(units), T), dtype=int)
        mult = 1
        for (members, _), (rows, m) in zip(per_group, picks):
            for k, row in zip(members, rows):
                on[k] = row
            mult *= m
        yield CommitmentPattern(ids, on, mult, initial)


@dataclass
class OracleResult:
    objective: float
    pattern: CommitmentPattern
    dispatch: dict[str, float]
    n_patterns: int
    n_raw: int


def pattern_assignment(pattern: CommitmentPattern) -> dict[str, float]:
    """Values for every u, y, z variable of the IUC model."""
    fixed = {}
    ys, zs = pattern.startups, pattern.shutdowns
    for k, uid in enumerate(pattern.units):
        for t in range(pattern.on.shape[1]):
            fixed[var_name("u", uid, t + 1)] = float(pattern.on[k, t])
            fixed[var_name("y", uid, t + 1)] = float(ys[k, t])
            fixed[var_name("z", uid, t + 1)] = float(zs[k, t])
    return fixed


def brute_force_optimum(
    instance: SystemInstance, solver: SolverConfig = IN_PROCESS, prune: bool = True
) -> OracleResult:
    """Exact IUC optimum by exhaustive search over commitment patterns."""
    _check_size(instance)
    model = build_formulation(instance, VariantId.IUC)
    best = None
    n_patterns = n_raw = 0
    for pattern in enumerate_commitment_patterns(instance, prune=prune):
        n_patterns += 1
        n_raw += pattern.multiplicity
        fixed = fix_variables(model, pattern_assignment(pattern))
        out = solve_model(fixed, solver, relaxed=True)
        if out.status is Status.INFEASIBLE:
            continue
        if out.status is not Status.OPTIMAL:
            raise OracleSolveError(f"dispatch LP failed ({out.status.value}): {out.message}")
        if best is None or out.objective < best[0] - 1e-9:
            best = (out.objective, pattern, out.point)
    if best is None:
        raise OracleSolveError("no commitment pattern admits a feasible dispatch")
    return OracleResult(best[0], best[1], best[2], n_patterns, n_raw)
