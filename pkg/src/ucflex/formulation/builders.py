"""Equation-family generators and the five model variants.

Every generator returns plain :class:`~ucflex.milp.LinearConstraint` rows that
refer to variables by their canonical names (see :func:`var_name`). Values at
t=0 come from the cluster's initial state and are folded into the right-hand
side. Row tags are ``eqNN`` for the cluster families and
``sysbal``/``sysrup``/``sysrdn`` for the system rows.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import replace
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from ..instance import (
    ClusterSpec,
    InstanceValidationError,
    SystemInstance,
    validate_instance,
)
from ..milp import LinearConstraint, MilpModel, Sense, Variable, VarKind, assemble_model


class VariantId(str, Enum):
    IUC = "IUC"
    CCUC = "CCUC"
    PCUC_S = "PCUC_S"
    PCUC_R = "PCUC_R"
    PCUC = "PCUC"

    @classmethod
    def parse(cls, text: str) -> "VariantId":
        key = text.strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown variant {text!r}; expected one of {[v.value for v in cls]}")

    @property
    def slotted(self) -> bool:
        return self in (VariantId.PCUC, VariantId.PCUC_S, VariantId.PCUC_R)


ALL_VARIANTS = tuple(VariantId)

CLUSTER_GROUPS = ("u", "y", "z", "p", "p_hat", "r_plus", "r_minus")
SLOT_GROUPS = ("u_tilde", "p_tilde", "rt_plus", "rt_minus")
SYSTEM_GROUPS = ("shed", "curtail", "short_up", "short_dn")


def var_name(group: str, cid: str | None, t: int, g: int | None = None) -> str:
    if cid is None:
        return f"{group}[{t}]"
    if g is None:
        return f"{group}[{cid}][{t}]"
    return f"{group}[{cid}][{g}][{t}]"


def row_name(tag: str, cid: str | None, t: int, g: int | None = None) -> str:
    if cid is None:
        return f"{tag}_t{t}"
    if g is None:
        return f"{tag}_{cid}_t{t}"
    return f"{tag}_{cid}_g{g}_t{t}"


# --------------------------------------------------------------------------- initial state


def initial_slot_state(cluster: ClusterSpec) -> tuple[np.ndarray, np.ndarray]:
    """Slot commitment and output above minimum at t=0.

    The first ``init_online`` slots are on; the initial output is poured into
    them greedily from slot 1, each filled up to P̄ - P_.
    """
    G = cluster.unit_count
    on = np.zeros(G)
    on[: cluster.init_online] = 1.0
    power = np.zeros(G)
    remaining = cluster.init_power_above_min
    for g in range(cluster.init_online):
        power[g] = min(cluster.span, remaining)
        remaining -= power[g]
    return on, power


def unit_clusters(
    instance: SystemInstance, cost_noise: float = 0.0, noise_seed: int = 0
) -> tuple[ClusterSpec, ...]:
    """Split every cluster into single-unit clusters ``<id>.<k>``.

    Initial state is distributed like the slot staircase. With
    ``cost_noise > 0`` each unit's variable cost is scaled by an independent
    factor drawn uniformly from ``[1 - cost_noise, 1 + cost_noise]``.
    """
    rng = np.random.default_rng(noise_seed)
    units = []
    for c in instance.clusters:
        on, power = initial_slot_state(c)
        for k in range(c.unit_count):
            factor = 1.0 + cost_noise * rng.uniform(-1.0, 1.0) if cost_noise > 0 else 1.0
            units.append(
                replace(
                    c,
                    id=f"{c.id}.{k + 1}",
                    unit_count=1,
                    init_online=int(on[k]),
                    init_power_above_min=float(power[k]),
                    cost_variable=c.cost_variable * factor,
                )
            )
    return tuple(units)


def model_clusters(
    instance: SystemInstance, variant: VariantId, cost_noise: float = 0.0, noise_seed: int = 0
) -> tuple[ClusterSpec, ...]:
    """The clusters a variant actually models (units for IUC)."""
    if variant is VariantId.IUC:
        return unit_clusters(instance, cost_noise, noise_seed)
    return instance.clusters


# --------------------------------------------------------------------------- row helper


class _Row:
    """Linear expression with a constant part, turned into a constraint at the end."""

    __slots__ = ("terms", "const")

    def __init__(self):
        self.terms: dict[str, float] = defaultdict(float)
        self.const = 0.0

    def add(self, name: str, coef: float) -> "_Row":
        self.terms[name] += coef
        return self

    def constant(self, value: float) -> "_Row":
        self.const += value
        return self

    def build(self, name: str, sense: Sense, rhs: float, tag: str) -> LinearConstraint:
        terms = tuple((v, c) for v, c in self.terms.items() if c != 0.0)
        return LinearConstraint(name, terms, sense, rhs - self.const, tag)


class _ClusterTerms:
    """Resolves ``group[t]`` references, substituting initial values at t=0."""

    def __init__(self, cluster: ClusterSpec, T: int):
        self.c = cluster
        self.T = T
        self.slot_on0, self.slot_p0 = initial_slot_state(cluster)

    def u(self, row: _Row, t: int, coef: float) -> _Row:
        if t == 0:
            return row.constant(coef * self.c.init_online)
        return row.add(var_name("u", self.c.id, t), coef)

    def p(self, row: _Row, t: int, coef: float) -> _Row:
        if t == 0:
            return row.constant(coef * self.c.init_power_above_min)
        return row.add(var_name("p", self.c.id, t), coef)

    def z_next(self, row: _Row, t: int, coef: float) -> _Row:
        # no shutdowns are scheduled past the horizon
        if t + 1 > self.T:
            return row
        return row.add(var_name("z", self.c.id, t + 1), coef)

    def ut(self, row: _Row, g: int, t: int, coef: float) -> _Row:
        if t == 0:
            return row.constant(coef * self.slot_on0[g - 1])
        # a slot keeps its last state after the horizon
        t = min(t, self.T)
        return row.add(var_name("u_tilde", self.c.id, t, g), coef)

    def pt(self, row: _Row, g: int, t: int, coef: float) -> _Row:
        if t == 0:
            return row.constant(coef * self.slot_p0[g - 1])
        return row.add(var_name("p_tilde", self.c.id, t, g), coef)


def _v(group: str, c: ClusterSpec, t: int, g: int | None = None) -> str:
    return var_name(group, c.id, t, g)


# --------------------------------------------------------------------------- variables


def cluster_variables(cluster: ClusterSpec, T: int, slots: bool, binary: bool = False) -> list[Variable]:
    """Cluster (and optionally slot) variables; ``binary`` types u, y, z as 0/1 (IUC units)."""
    G = cluster.unit_count
    if binary and G != 1:
        raise ValueError("binary commitment variables need a single-unit cluster")
    kind = VarKind.BINARY if binary else VarKind.INTEGER
    out = []
    for group in ("u", "y", "z"):
        out += [Variable(_v(group, cluster, t), kind, 0.0, float(G), group) for t in range(1, T + 1)]
    for group in ("p", "p_hat", "r_plus", "r_minus"):
        out += [Variable(_v(group, cluster, t), group=group) for t in range(1, T + 1)]
    if slots:
        for g in range(1, G + 1):
            out += [
                Variable(_v("u_tilde", cluster, t, g), VarKind.BINARY, 0.0, 1.0, "u_tilde")
                for t in range(1, T + 1)
            ]
        for group in ("p_tilde", "rt_plus", "rt_minus"):
            for g in range(1, G + 1):
                out += [Variable(_v(group, cluster, t, g), group=group) for t in range(1, T + 1)]
    return out


def system_variables(instance: SystemInstance) -> list[Variable]:
    T = instance.horizon
    renewable = instance.renewable_profile or (0.0,) * T
    out = [Variable(var_name("shed", None, t), group="slack") for t in range(1, T + 1)]
    out += [
        Variable(var_name("curtail", None, t), upper=float(renewable[t - 1]), group="slack")
        for t in range(1, T + 1)
    ]
    out += [Variable(var_name("short_up", None, t), group="slack") for t in range(1, T + 1)]
    out += [Variable(var_name("short_dn", None, t), group="slack") for t in range(1, T + 1)]
    return out


# --------------------------------------------------------------------------- cluster families


def gen_commitment_logic(cluster: ClusterSpec, T: int) -> list[LinearConstraint]:
    """Commitment balance and minimum up/down windows (eq01-eq03).

    Windows that would reach before t=1 are truncated at t=1.
    """
    c, ref = cluster, _ClusterTerms(cluster, T)
    rows = []
    for t in range(1, T + 1):
        row = _Row().add(_v("u", c, t), 1.0).add(_v("y", c, t), -1.0).add(_v("z", c, t), 1.0)
        ref.u(row, t - 1, -1.0)
        rows.append(row.build(row_name("eq01", c.id, t), Sense.EQ, 0.0, "eq01"))
    for t in range(1, T + 1):
        row = _Row().add(_v("u", c, t), -1.0)
        for i in range(max(1, t - c.min_up + 1), t + 1):
            row.add(_v("y", c, i), 1.0)
        rows.append(row.build(row_name("eq02", c.id, t), Sense.LE, 0.0, "eq02"))
    for t in range(1, T + 1):
        row = _Row().add(_v("u", c, t), 1.0)
        for i in range(max(1, t - c.min_down + 1), t + 1):
            row.add(_v("z", c, i), 1.0)
        rows.append(row.build(row_name("eq03", c.id, t), Sense.LE, float(c.unit_count), "eq03"))
    return rows


def gen_cluster_capacity(cluster: ClusterSpec, T: int) -> list[LinearConstraint]:
    """Cluster output limits with startup/shutdown capability (eq04-eq06), eq07, eq08."""
    c, ref = cluster, _ClusterTerms(cluster, T)
    rows = []
    for t in range(1, T + 1):
        def head():
            return (
                _Row()
                .add(_v("p", c, t), 1.0)
                .add(_v("r_plus", c, t), 1.0)
                .add(_v("u", c, t), -c.span)
            )

        if c.min_up >= 2:
            row = head().add(_v("y", c, t), c.p_max - c.su_cap)
            ref.z_next(row, t, c.p_max - c.sd_cap)
            rows.append(row.build(row_name("eq04", c.id, t), Sense.LE, 0.0, "eq04"))
        else:
            row = head().add(_v("y", c, t), max(c.sd_cap - c.su_cap, 0.0))
            ref.z_next(row, t, c.p_max - c.sd_cap)
            rows.append(row.build(row_name("eq05", c.id, t), Sense.LE, 0.0, "eq05"))
            row = head().add(_v("y", c, t), c.p_max - c.su_cap)
            ref.z_next(row, t, max(c.su_cap - c.sd_cap, 0.0))
            rows.append(row.build(row_name("eq06", c.id, t), Sense.LE, 0.0, "eq06"))
    return rows + gen_min_output(cluster, T) + gen_total_output(cluster, T)


def gen_min_output(cluster: ClusterSpec, T: int) -> list[LinearConstraint]:
    c = cluster
    return [
        _Row()
        .add(_v("p", c, t), 1.0)
        .add(_v("r_minus", c, t), -1.0)
        .build(row_name("eq07", c.id, t), Sense.GE, 0.0, "eq07")
        for t in range(1, T + 1)
    ]


def gen_total_output(cluster: ClusterSpec, T: int) -> list[LinearConstraint]:
    c = cluster
    return [
        _Row()
        .add(_v("p_hat", c, t), 1.0)
        .add(_v("u", c, t), -c.p_min)
        .add(_v("p", c, t), -1.0)
        .build(row_name("eq08", c.id, t), Sense.EQ, 0.0, "eq08")
        for t in range(1, T + 1)
    ]


def gen_cluster_ramps(cluster: ClusterSpec, T: int) -> list[LinearConstraint]:
    """Scaled single-unit ramp limits (eq09, eq10)."""
    c, ref = cluster, _ClusterTerms(cluster, T)
    rows = []
    for t in range(1, T + 1):
        row = _Row().add(_v("p", c, t), 1.0).add(_v("r_plus", c, t), 1.0)
        ref.p(row, t - 1, -1.0)
        row.add(_v("u", c, t), -c.ramp_up)
        rows.append(row.build(row_name("eq09", c.id, t), Sense.LE, 0.0, "eq09"))
    for t in range(1, T + 1):
        row = _Row().add(_v("p", c, t), -1.0).add(_v("r_minus", c, t), 1.0)
        ref.p(row, t - 1, 1.0)
        ref.u(row, t - 1, -c.ramp_down)
        rows.append(row.build(row_name("eq10", c.id, t), Sense.LE, 0.0, "eq10"))
    return rows


# --------------------------------------------------------------------------- slot families


def gen_unit_ordering(cluster: ClusterSpec, T: int) -> list[LinearConstraint]:
    """Staircase over slots: slot 1 is committed first (eq11-eq13)."""
    c, G = cluster, cluster.unit_count
    rows = []
    for t in range(1, T + 1):
        rows.append(
            _Row().add(_v("u_tilde", c, t, 1), 1.0).build(row_name("eq11", c.id, t), Sense.LE, 1.0, "eq11")
        )
    for t in range(1, T + 1):
        for g in range(1, G):
            rows.append(
                _Row()
                .add(_v("u_tilde", c, t, g + 1), 1.0)
                .add(_v("u_tilde", c, t, g), -1.0)
                .build(row_name("eq12", c.id, t, g), Sense.LE, 0.0, "eq12")
            )
    for t in range(1, T + 1):
        rows.append(
            _Row().add(_v("u_tilde", c, t, G), 1.0).build(row_name("eq13", c.id, t), Sense.GE, 0.0, "eq13")
        )
    return rows


def gen_unit_capacity(cluster: ClusterSpec, T: int, include_upper: bool = True) -> list[LinearConstraint]:
    """Per-slot output limits: eq14 (optional) and eq15."""
    c, G = cluster, cluster.unit_count
    rows = []
    if include_upper:
        for t in range(1, T + 1):
            for g in range(1, G + 1):
                rows.append(
                    _Row()
                    .add(_v("p_tilde", c, t, g), 1.0)
                    .add(_v("rt_plus", c, t, g), 1.0)
                    .add(_v("u_tilde", c, t, g), -c.span)
                    .build(row_name("eq14", c.id, t, g), Sense.LE, 0.0, "eq14")
                )
    for t in range(1, T + 1):
        for g in range(1, G + 1):
            rows.append(
                _Row()
                .add(_v("p_tilde", c, t, g), 1.0)
                .add(_v("rt_minus", c, t, g), -1.0)
                .build(row_name("eq15", c.id, t, g), Sense.GE, 0.0, "eq15")
            )
    return rows


def gen_aggregation(cluster: ClusterSpec, T: int) -> list[LinearConstraint]:
    """Cluster commitment, reserves and output as slot sums (eq16-eq19)."""
    c, G = cluster, cluster.unit_count
    rows = []
    for tag, agg, slot in (
        ("eq16", "u", "u_tilde"),
        ("eq17", "r_plus", "rt_plus"),
        ("eq18", "r_minus", "rt_minus"),
        ("eq19", "p", "p_tilde"),
    ):
        for t in range(1, T + 1):
            row = _Row().add(_v(agg, c, t), 1.0)
            for g in range(1, G + 1):
                row.add(_v(slot, c, t, g), -1.0)
            rows.append(row.build(row_name(tag, c.id, t), Sense.EQ, 0.0, tag))
    return rows


def gen_unit_susd_capacity(cluster: ClusterSpec, T: int) -> list[LinearConstraint]:
    """Per-slot startup/shutdown capability (eq20, eq21 for TU >= 2; eq22 for TU = 1).

    Rows are emitted for every t; at t=T the next-period slot state is taken
    equal to the state at T, so no shutdown is imposed after the horizon.
    """
    c, G, ref = cluster, cluster.unit_count, _ClusterTerms(cluster, T)
    rows = []

    def head(g, t):
        return _Row().add(_v("p_tilde", c, t, g), 1.0).add(_v("rt_plus", c, t, g), 1.0)

    for t in range(1, T + 1):
        for g in range(1, G + 1):
            if c.min_up >= 2:
                row = ref.ut(head(g, t), g, t, -(c.su_cap - c.p_min))
                ref.ut(row, g, t - 1, -(c.p_max - c.su_cap))
                rows.append(row.build(row_name("eq20", c.id, t, g), Sense.LE, 0.0, "eq20"))
                row = ref.ut(head(g, t), g, t, -(c.sd_cap - c.p_min))
                ref.ut(row, g, t + 1, -(c.p_max - c.sd_cap))
                rows.append(row.build(row_name("eq21", c.id, t, g), Sense.LE, 0.0, "eq21"))
            else:
                row = ref.ut(head(g, t), g, t, -(c.su_cap - c.p_max + c.sd_cap - c.p_min))
                ref.ut(row, g, t - 1, -(c.p_max - c.su_cap))
                ref.ut(row, g, t + 1, -(c.p_max - c.sd_cap))
                rows.append(row.build(row_name("eq22", c.id, t, g), Sense.LE, 0.0, "eq22"))
    return rows


def gen_unit_ramps(cluster: ClusterSpec, T: int) -> list[LinearConstraint]:
    """Per-slot ramp limits (eq23, eq24)."""
    c, G, ref = cluster, cluster.unit_count, _ClusterTerms(cluster, T)
    rows = []
    for t in range(1, T + 1):
        for g in range(1, G + 1):
            row = _Row().add(_v("p_tilde", c, t, g), 1.0).add(_v("rt_plus", c, t, g), 1.0)
            ref.pt(row, g, t - 1, -1.0)
            ref.ut(row, g, t, -c.ramp_up)
            rows.append(row.build(row_name("eq23", c.id, t, g), Sense.LE, 0.0, "eq23"))
    for t in range(1, T + 1):
        for g in range(1, G + 1):
            row = _Row().add(_v("p_tilde", c, t, g), -1.0).add(_v("rt_minus", c, t, g), 1.0)
            ref.pt(row, g, t - 1, 1.0)
            ref.ut(row, g, t - 1, -c.ramp_down)
            rows.append(row.build(row_name("eq24", c.id, t, g), Sense.LE, 0.0, "eq24"))
    return rows


# --------------------------------------------------------------------------- system


def gen_system_constraints(
    instance: SystemInstance, clusters: Iterable[ClusterSpec] | None = None
) -> tuple[list[LinearConstraint], dict[str, float]]:
    """Demand balance, reserve cover and the full objective."""
    clusters = tuple(instance.clusters if clusters is None else clusters)
    T = instance.horizon
    renewable = instance.renewable_profile or (0.0,) * T
    rows = []
    for t in range(1, T + 1):
        row = _Row()
        for c in clusters:
            row.add(_v("p_hat", c, t), 1.0)
        row.add(var_name("curtail", None, t), -1.0).add(var_name("shed", None, t), 1.0)
        row.constant(renewable[t - 1])
        rows.append(row.build(row_name("sysbal", None, t), Sense.EQ, instance.demand[t - 1], "sysbal"))
    for tag, agg, short, req in (
        ("sysrup", "r_plus", "short_up", instance.reserve_up_req),
        ("sysrdn", "r_minus", "short_dn", instance.reserve_down_req),
    ):
        for t in range(1, T + 1):
            row = _Row()
            for c in clusters:
                row.add(_v(agg, c, t), 1.0)
            row.add(var_name(short, None, t), 1.0)
            rows.append(row.build(row_name(tag, None, t), Sense.GE, req[t - 1], tag))

    objective: dict[str, float] = {}
    for c in clusters:
        for t in range(1, T + 1):
            for group, cost in (
                ("u", c.cost_fixed),
                ("p_hat", c.cost_variable),
                ("y", c.cost_startup),
                ("z", c.cost_shutdown),
            ):
                if cost != 0.0:
                    objective[_v(group, c, t)] = cost
    for t in range(1, T + 1):
        for group, cost in (
            ("curtail", instance.cost_curtailment),
            ("shed", instance.cost_shed),
            ("short_up", instance.cost_reserve_shortfall),
            ("short_dn", instance.cost_reserve_shortfall),
        ):
            if cost != 0.0:
                objective[var_name(group, None, t)] = cost
    return rows, objective


# --------------------------------------------------------------------------- variants


def cluster_tags(cluster: ClusterSpec, variant: VariantId) -> set[str]:
    """Equation tags a variant emits for one (modelled) cluster."""
    tags = {"eq01", "eq02", "eq03", "eq08"}
    tags |= {"eq04"} if cluster.min_up >= 2 else {"eq05", "eq06"}
    if not variant.slotted:
        return tags | {"eq07", "eq09", "eq10"}
    # eq14 stays next to eq20-eq22: those rows bound p~ + r~+ through the
    # neighbouring slot states only, so without eq14 a slot that is off at t
    # but on at t-1 or t+1 could still hold output or up-reserve.
    tags |= {"eq11", "eq13", "eq14", "eq15", "eq16", "eq17", "eq18", "eq19"}
    if cluster.unit_count >= 2:
        tags.add("eq12")
    if variant is not VariantId.PCUC_S:
        tags |= {"eq20", "eq21"} if cluster.min_up >= 2 else {"eq22"}
    if variant is VariantId.PCUC_R:
        tags |= {"eq09", "eq10"}
    else:
        tags |= {"eq23", "eq24"}
    return tags


def expected_tags(instance: SystemInstance, variant: VariantId) -> set[str]:
    tags = {"sysbal", "sysrup", "sysrdn"}
    for c in model_clusters(instance, variant):
        tags |= cluster_tags(c, variant)
    return tags


def cluster_constraints(cluster: ClusterSpec, T: int, variant: VariantId) -> list[LinearConstraint]:
    rows = gen_commitment_logic(cluster, T)
    if not variant.slotted:
        return rows + gen_cluster_capacity(cluster, T) + gen_cluster_ramps(cluster, T)

    capacity = [r for r in gen_cluster_capacity(cluster, T) if r.tag != "eq07"]
    rows += capacity + gen_unit_ordering(cluster, T)
    rows += gen_unit_capacity(cluster, T)
    rows += gen_aggregation(cluster, T)
    if variant is not VariantId.PCUC_S:
        rows += gen_unit_susd_capacity(cluster, T)
    if variant is VariantId.PCUC_R:
        rows += gen_cluster_ramps(cluster, T)
    else:
        rows += gen_unit_ramps(cluster, T)
    return rows


def build_ordered_subsystem(
    cluster: ClusterSpec, T: int, objective: Mapping[str, float] | None = None
) -> MilpModel:
    """Slot staircase with per-slot capacity, linked to the cluster count and output.

    Only the ordering rows, both per-slot capacity rows and the commitment and
    output aggregation rows are kept; there is no commitment logic, ramping
    or demand.  Its LP relaxation should have integral slot commitments for
    any objective, which is what the integrality tests probe.
    """
    c, G = cluster, cluster.unit_count
    variables = [Variable(_v("u", c, t), VarKind.INTEGER, 0.0, float(G), "u") for t in range(1, T + 1)]
    variables += [Variable(_v("p", c, t), group="p") for t in range(1, T + 1)]
    for group, kind, upper in (
        ("u_tilde", VarKind.BINARY, 1.0),
        ("p_tilde", VarKind.CONTINUOUS, math.inf),
        ("rt_plus", VarKind.CONTINUOUS, math.inf),
        ("rt_minus", VarKind.CONTINUOUS, math.inf),
    ):
        variables += [
            Variable(_v(group, c, t, g), kind, 0.0, upper, group)
            for g in range(1, G + 1)
            for t in range(1, T + 1)
        ]
    rows = gen_unit_ordering(c, T) + gen_unit_capacity(c, T)
    rows += [r for r in gen_aggregation(c, T) if r.tag in ("eq16", "eq19")]
    return assemble_model(variables, rows, objective or {}, {"variant": "ordered-subsystem"})


def build_formulation(
    instance: SystemInstance,
    variant: VariantId | str,
    cost_noise: float = 0.0,
    noise_seed: int = 0,
) -> MilpModel:
    """Assemble the MILP of ``variant`` for ``instance``.

    ``cost_noise`` (a fraction, e.g. 0.01 for +-1 %) perturbs each unit's
    variable cost and is only meaningful for IUC; clustered variants require
    identical units and reject it.
    """
    variant = VariantId.parse(variant) if isinstance(variant, str) else variant
    report = validate_instance(instance)
    if report:
        raise InstanceValidationError(report)
    if cost_noise and variant is not VariantId.IUC:
        raise ValueError("cost noise applies to IUC only")

    T = instance.horizon
    clusters = model_clusters(instance, variant, cost_noise, noise_seed)
    variables, rows = [], []
    for c in clusters:
        variables += cluster_variables(c, T, slots=variant.slotted, binary=variant is VariantId.IUC)
        rows += cluster_constraints(c, T, variant)
    variables += system_variables(instance)
    sys_rows, objective = gen_system_constraints(instance, clusters)
    rows += sys_rows
    metadata = {"variant": variant.value, "instance": instance.digest()}
    if cost_noise:
        metadata["cost_noise"] = repr(cost_noise)
        metadata["noise_seed"] = str(noise_seed)
    return assemble_model(variables, rows, objective, metadata)
