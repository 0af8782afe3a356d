"""Solver-agnostic mixed-integer linear programs.

A :class:`MilpModel` is an immutable bag of named variables, named linear rows
and a linear objective (always minimized). Everything downstream, from the MPS
writer to the feasibility evaluator, works off this representation only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

FEAS_TOL = 1e-6
INT_TOL = 1e-6


class ModelError(ValueError):
    """Raised when a model is structurally invalid."""


class VarKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"
    INTEGER = "integer"


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass(frozen=True)
class Variable:
    name: str
    kind: VarKind = VarKind.CONTINUOUS
    lower: float = 0.0
    upper: float = math.inf
    group: str = ""

    def __post_init__(self):
        if self.lower > self.upper:
            raise ModelError(f"variable {self.name}: lower {self.lower} > upper {self.upper}")
        if self.kind is VarKind.BINARY and (self.lower < 0 or self.upper > 1):
            raise ModelError(f"binary variable {self.name} has bounds outside [0, 1]")

    @property
    def is_integral(self) -> bool:
        return self.kind is not VarKind.CONTINUOUS


@dataclass(frozen=True)
class LinearConstraint:
    name: str
    terms: tuple[tuple[str, float], ...]
    sense: Sense
    rhs: float
    tag: str = ""

    def __post_init__(self):
        seen = set()
        for var, _ in self.terms:
            if var in seen:
                raise ModelError(f"constraint {self.name}: duplicate variable {var}")
            seen.add(var)

    def activity(self, point: Mapping[str, float]) -> float:
        return math.fsum(coef * point[var] for var, coef in self.terms)

    def violation(self, point: Mapping[str, float]) -> float:
        """Amount by which ``point`` fails this row (0 when satisfied)."""
        lhs = self.activity(point)
        if self.sense is Sense.LE:
            return max(lhs - self.rhs, 0.0)
        if self.sense is Sense.GE:
            return max(self.rhs - lhs, 0.0)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class ModelStats:
    n_binary: int
    n_integer: int
    n_continuous: int
    n_constraints: int
    n_nonzeros: int


@dataclass(frozen=True)
class MilpModel:
    variables: tuple[Variable, ...]
    constraints: tuple[LinearConstraint, ...]
    objective: tuple[tuple[str, float], ...]
    metadata: Mapping[str, str] = field(default_factory=dict)
    _index: Mapping[str, int] = field(default=None, repr=False, compare=False)

    @property
    def index(self) -> Mapping[str, int]:
        """Variable name -> column position."""
        return self._index

    def variable(self, name: str) -> Variable:
        return self.variables[self._index[name]]

    @property
    def tags(self) -> set[str]:
        return {c.tag for c in self.constraints}

    def rows_with_tag(self, tag: str) -> list[LinearConstraint]:
        return [c for c in self.constraints if c.tag == tag]


def assemble_model(
    variables: Iterable[Variable],
    constraints: Iterable[LinearConstraint],
    objective: Iterable[tuple[str, float]] | Mapping[str, float],
    metadata: Mapping[str, str] | None = None,
) -> MilpModel:
    """Validate the parts and freeze them into a :class:`MilpModel`.

    Raises :class:`ModelError` on duplicate variable or constraint names and
    on any reference to an undeclared variable.
    """
    variables = tuple(variables)
    constraints = tuple(constraints)
    if isinstance(objective, Mapping):
        objective = objective.items()
    objective = tuple((str(k), float(v)) for k, v in objective)

    index: dict[str, int] = {}
    for pos, var in enumerate(variables):
        if var.name in index:
            raise ModelError(f"duplicate variable name {var.name!r}")
        index[var.name] = pos

    row_names = set()
    for con in constraints:
        if con.name in row_names:
            raise ModelError(f"duplicate constraint name {con.name!r}")
        row_names.add(con.name)
        for var, _ in con.terms:
            if var not in index:
                raise ModelError(f"constraint {con.name!r} references unknown variable {var!r}")

    seen = set()
    for var, _ in objective:
        if var not in index:
            raise ModelError(f"objective references unknown variable {var!r}")
        if var in seen:
            raise ModelError(f"objective lists {var!r} twice")
        seen.add(var)

    return MilpModel(
        variables=variables,
        constraints=constraints,
        objective=objective,
        metadata=MappingProxyType(dict(metadata or {})),
        _index=MappingProxyType(index),
    )


@dataclass
class Evaluation:
    objective: float
    violations: list[tuple[str, float]]
    integrality_violations: list[tuple[str, float]]
    bound_violations: list[tuple[str, float]]

    @property
    def feasible(self) -> bool:
        return not (self.violations or self.integrality_violations or self.bound_violations)


def evaluate_point(model: MilpModel, point: Mapping[str, float], tol: float = FEAS_TOL) -> Evaluation:
    """Objective value and every row, bound and integrality violation of ``point``.

    Violations are reported with their amount; a row counts as violated only
    when it misses its sense by more than ``tol`` (absolute).
    """
    for var in model.variables:
        if var.name not in point:
            raise KeyError(f"point has no value for variable {var.name!r}")

    objective = math.fsum(coef * point[name] for name, coef in model.objective)
    violations = []
    for con in model.constraints:
        amount = con.violation(point)
        if amount > tol:
            violations.append((con.name, amount))

    integrality, bounds = [], []
    for var in model.variables:
        value = point[var.name]
        if var.is_integral:
            frac = abs(value - round(value))
            if frac > INT_TOL:
                integrality.append((var.name, frac))
        miss = max(var.lower - value, value - var.upper, 0.0)
        if miss > tol:
            bounds.append((var.name, miss))
    return Evaluation(objective, violations, integrality, bounds)


def relax_integrality(model: MilpModel) -> MilpModel:
    variables = tuple(
        replace(v, kind=VarKind.CONTINUOUS) if v.is_integral else v for v in model.variables
    )
    return replace(model, variables=variables)


def fix_variables(model: MilpModel, values: Mapping[str, float]) -> MilpModel:
    """Copy of ``model`` with the named variables pinned to the given values."""
    unknown = set(values) - set(model.index)
    if unknown:
        raise ModelError(f"cannot fix unknown variables {sorted(unknown)[:5]}")
    variables = tuple(
        replace(v, lower=float(values[v.name]), upper=float(values[v.name]))
        if v.name in values
        else v
        for v in model.variables
    )
    return replace(model, variables=variables)


def model_statistics(model: MilpModel) -> ModelStats:
    counts = {kind: 0 for kind in VarKind}
    for var in model.variables:
        counts[var.kind] += 1
    return ModelStats(
        n_binary=counts[VarKind.BINARY],
        n_integer=counts[VarKind.INTEGER],
        n_continuous=counts[VarKind.CONTINUOUS],
        n_constraints=len(model.constraints),
        n_nonzeros=sum(len(c.terms) for c in model.constraints),
    )


@dataclass(frozen=True)
class MatrixForm:
    """Column-ordered arrays of a model: ``row_lo <= A x <= row_hi``, ``lb <= x <= ub``."""

    c: np.ndarray
    A: sparse.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray
    names: Sequence[str]


def to_matrix_form(model: MilpModel) -> MatrixForm:
    n = len(model.variables)
    index = model.index
    c = np.zeros(n)
    for name, coef in model.objective:
        c[index[name]] = coef

    rows, cols, vals = [], [], []
    m = len(model.constraints)
    row_lo = np.full(m, -np.inf)
    row_hi = np.full(m, np.inf)
    for i, con in enumerate(model.constraints):
        for name, coef in con.terms:
            rows.append(i)
            cols.append(index[name])
            vals.append(coef)
        if con.sense is not Sense.GE:
            row_hi[i] = con.rhs
        if con.sense is not Sense.LE:
            row_lo[i] = con.rhs
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(m, n))

    lb = np.array([v.lower for v in model.variables], dtype=float)
    ub = np.array([v.upper for v in model.variables], dtype=float)
    integrality = np.array([1 if v.is_integral else 0 for v in model.variables])
    return MatrixForm(c, A, row_lo, row_hi, lb, ub, integrality, [v.name for v in model.variables])
