"""Schedules pulled out of solver points, and an arithmetic re-check of them.

:func:`check_schedule_feasibility` deliberately does not touch the MILP rows:
every equation family is re-stated here with numpy arrays so that a wrong
coefficient in the builders shows up as a disagreement between the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..instance import ClusterSpec, SystemInstance
from .builders import (
    CLUSTER_GROUPS,
    SLOT_GROUPS,
    SYSTEM_GROUPS,
    VariantId,
    cluster_tags,
    initial_slot_state,
    model_clusters,
    var_name,
)

TOL = 1e-6


class ScheduleError(ValueError):
    pass


@dataclass
class ClusterSchedule:
    """Trajectories of one modelled cluster; arrays are indexed by t-1 (and g-1)."""

    u: np.ndarray
    y: np.ndarray
    z: np.ndarray
    p: np.ndarray
    p_hat: np.ndarray
    r_plus: np.ndarray
    r_minus: np.ndarray
    u_tilde: np.ndarray | None = None
    p_tilde: np.ndarray | None = None
    rt_plus: np.ndarray | None = None
    rt_minus: np.ndarray | None = None

    @property
    def has_slots(self) -> bool:
        return self.u_tilde is not None


@dataclass
class Schedule:
    variant: VariantId
    clusters: dict[str, ClusterSchedule]
    shed: np.ndarray
    curtail: np.ndarray
    short_up: np.ndarray
    short_dn: np.ndarray
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Finding:
    tag: str
    cluster: str | None
    t: int
    g: int | None
    amount: float


def _integral(value: float, name: str) -> float:
    r = round(value)
    if abs(value - r) > TOL:
        raise ScheduleError(f"{name} = {value} is not integral")
    return float(r)


def extract_schedule(
    instance: SystemInstance, variant: VariantId | str, point: Mapping[str, float]
) -> Schedule:
    """Look every variable of the variant's model up in ``point``.

    Integer quantities are rounded once they are within 1e-6 of an integer;
    anything farther raises :class:`ScheduleError`, as does a missing name.
    """
    variant = VariantId.parse(variant) if isinstance(variant, str) else variant
    T = instance.horizon

    def get(name):
        try:
            return float(point[name])
        except KeyError:
            raise ScheduleError(f"point has no value for {name}") from None

    clusters = {}
    for c in model_clusters(instance, variant):
        arrays = {}
        for group in CLUSTER_GROUPS:
            values = [get(var_name(group, c.id, t)) for t in range(1, T + 1)]
            if group in ("u", "y", "z"):
                values = [_integral(v, f"{group}[{c.id}]") for v in values]
            arrays[group] = np.array(values)
        if variant.slotted:
            G = c.unit_count
            for group in SLOT_GROUPS:
                mat = np.array(
                    [[get(var_name(group, c.id, t, g)) for t in range(1, T + 1)] for g in range(1, G + 1)]
                )
                if group == "u_tilde":
                    mat = np.vectorize(lambda v: _integral(v, f"u_tilde[{c.id}]"))(mat)
                arrays[group] = mat.reshape(G, T)
        clusters[c.id] = ClusterSchedule(**arrays)
    system = {
        group: np.array([get(var_name(group, None, t)) for t in range(1, T + 1)])
        for group in SYSTEM_GROUPS
    }
    return Schedule(variant, clusters, **system)


def disaggregate_schedule(instance: SystemInstance, schedule: Schedule) -> Schedule:
    """Give a cluster-level schedule slot trajectories.

    Slots follow the staircase (the first u_t slots are on) and output and
    reserves are poured into slots greedily from slot 1, each up to P̄ - P_.
    Useful for asking whether a classic clustered solution could be realised
    unit by unit.
    """
    if schedule.variant is VariantId.IUC:
        raise ScheduleError("IUC schedules are already per unit")
    out = {}
    for c in instance.clusters:
        cs = schedule.clusters[c.id]
        G, T = c.unit_count, len(cs.u)
        ut = np.zeros((G, T))
        for t in range(T):
            ut[: int(cs.u[t]), t] = 1.0

        def pour(total):
            mat = np.zeros((G, T))
            for t in range(T):
                left = total[t]
                for g in range(int(cs.u[t])):
                    mat[g, t] = min(c.span, left)
                    left -= mat[g, t]
                if left > TOL and cs.u[t] > 0:
                    mat[int(cs.u[t]) - 1, t] += left
            return mat

        out[c.id] = ClusterSchedule(
            u=cs.u, y=cs.y, z=cs.z, p=cs.p, p_hat=cs.p_hat, r_plus=cs.r_plus, r_minus=cs.r_minus,
            u_tilde=ut, p_tilde=pour(cs.p), rt_plus=pour(cs.r_plus), rt_minus=pour(cs.r_minus),
        )
    return Schedule(
        schedule.variant, out, schedule.shed, schedule.curtail, schedule.short_up, schedule.short_dn,
        dict(schedule.meta),
    )


def schedule_cost(instance: SystemInstance, schedule: Schedule, clusters=None) -> float:
    """Objective value of a schedule, computed from the instance costs."""
    clusters = clusters or model_clusters(instance, schedule.variant)
    total = 0.0
    for c in clusters:
        cs = schedule.clusters[c.id]
        total += c.cost_fixed * cs.u.sum() + c.cost_variable * cs.p_hat.sum()
        total += c.cost_startup * cs.y.sum() + c.cost_shutdown * cs.z.sum()
    total += instance.cost_curtailment * schedule.curtail.sum()
    total += instance.cost_shed * schedule.shed.sum()
    total += instance.cost_reserve_shortfall * (schedule.short_up.sum() + schedule.short_dn.sum())
    return float(total)


# --------------------------------------------------------------------------- checker


def _shift(x: np.ndarray, first: float | np.ndarray) -> np.ndarray:
    """x_{t-1} along the last axis, with ``first`` standing in for t=0."""
    prev = np.empty_like(x)
    prev[..., 1:] = x[..., :-1]
    prev[..., 0] = first
    return prev


def _next(x: np.ndarray, after: np.ndarray | float) -> np.ndarray:
    nxt = np.empty_like(x)
    nxt[..., :-1] = x[..., 1:]
    nxt[..., -1] = after
    return nxt


class _Collector:
    def __init__(self, tags: set[str]):
        self.tags = tags
        self.found: list[Finding] = []

    def le(self, tag, cid, lhs, rhs, slotted=False):
        """Record where lhs <= rhs fails; arrays are (T,) or (G, T)."""
        if tag not in self.tags:
            return
        excess = np.asarray(lhs - rhs, dtype=float)
        for idx in zip(*np.nonzero(excess > TOL)):
            g, t = (int(idx[0]) + 1, int(idx[1]) + 1) if slotted else (None, int(idx[0]) + 1)
            self.found.append(Finding(tag, cid, t, g, float(excess[idx])))

    def eq(self, tag, cid, lhs, rhs, slotted=False):
        if tag not in self.tags:
            return
        gap = np.abs(np.asarray(lhs - rhs, dtype=float))
        for idx in zip(*np.nonzero(gap > TOL)):
            g, t = (int(idx[0]) + 1, int(idx[1]) + 1) if slotted else (None, int(idx[0]) + 1)
            self.found.append(Finding(tag, cid, t, g, float(gap[idx])))


def _window_sum(x: np.ndarray, width: int) -> np.ndarray:
    c = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, len(x) + 1)
    return c[idx] - c[np.maximum(idx - width, 0)]


def _check_cluster(col: _Collector, c: ClusterSpec, cs: ClusterSchedule) -> None:
    G, cid = c.unit_count, c.id
    u, y, z, p, ph, rp, rm = cs.u, cs.y, cs.z, cs.p, cs.p_hat, cs.r_plus, cs.r_minus
    u_prev = _shift(u, c.init_online)
    p_prev = _shift(p, c.init_power_above_min)
    z_next = _next(z, 0.0)
    span = c.p_max - c.p_min

    for arr in (u, y, z, p, ph, rp, rm):
        col.le("bounds", cid, -arr, 0.0)
    col.le("bounds", cid, u, float(G))

    col.eq("eq01", cid, u - u_prev, y - z)
    col.le("eq02", cid, _window_sum(y, c.min_up), u)
    col.le("eq03", cid, _window_sum(z, c.min_down), G - u)
    head = p + rp
    col.le("eq04", cid, head, span * u - (c.p_max - c.su_cap) * y - (c.p_max - c.sd_cap) * z_next)
    col.le("eq05", cid, head, span * u - (c.p_max - c.sd_cap) * z_next - max(c.sd_cap - c.su_cap, 0) * y)
    col.le("eq06", cid, head, span * u - (c.p_max - c.su_cap) * y - max(c.su_cap - c.sd_cap, 0) * z_next)
    col.le("eq07", cid, rm, p)
    col.eq("eq08", cid, ph, c.p_min * u + p)
    col.le("eq09", cid, p - p_prev + rp, c.ramp_up * u)
    col.le("eq10", cid, -p + p_prev + rm, c.ramp_down * u_prev)

    if not cs.has_slots:
        return
    ut, pt, rtp, rtm = cs.u_tilde, cs.p_tilde, cs.rt_plus, cs.rt_minus
    on0, pw0 = initial_slot_state(c)
    ut_prev = _shift(ut, on0)
    ut_next = _next(ut, ut[:, -1])
    pt_prev = _shift(pt, pw0)

    for arr in (ut, pt, rtp, rtm):
        col.le("bounds", cid, -arr, 0.0, slotted=True)
    col.le("bounds", cid, ut, 1.0, slotted=True)

    col.le("eq11", cid, ut[0], np.ones_like(ut[0]))
    if G >= 2:
        col.le("eq12", cid, ut[1:], ut[:-1], slotted=True)
    col.le("eq13", cid, np.zeros_like(ut[-1]), ut[-1])
    col.le("eq14", cid, pt + rtp, span * ut, slotted=True)
    col.le("eq15", cid, rtm, pt, slotted=True)
    col.eq("eq16", cid, u, ut.sum(axis=0))
    col.eq("eq17", cid, rp, rtp.sum(axis=0))
    col.eq("eq18", cid, rm, rtm.sum(axis=0))
    col.eq("eq19", cid, p, pt.sum(axis=0))
    head = pt + rtp
    col.le("eq20", cid, head, (c.su_cap - c.p_min) * ut + (c.p_max - c.su_cap) * ut_prev, slotted=True)
    col.le("eq21", cid, head, (c.sd_cap - c.p_min) * ut + (c.p_max - c.sd_cap) * ut_next, slotted=True)
    col.le(
        "eq22",
        cid,
        head,
        (c.su_cap - c.p_max + c.sd_cap - c.p_min) * ut
        + (c.p_max - c.su_cap) * ut_prev
        + (c.p_max - c.sd_cap) * ut_next,
        slotted=True,
    )
    col.le("eq23", cid, pt - pt_prev + rtp, c.ramp_up * ut, slotted=True)
    col.le("eq24", cid, -pt + pt_prev + rtm, c.ramp_down * ut_prev, slotted=True)


def check_schedule_feasibility(
    instance: SystemInstance, variant: VariantId | str, schedule: Schedule
) -> list[Finding]:
    """Re-check ``schedule`` against every equation family of ``variant``.

    Returns one :class:`Finding` per violated (family, cluster, slot, period)
    at tolerance 1e-6; an empty list means the schedule is feasible. The
    variant may differ from the one the schedule came from, provided the
    schedule carries slot trajectories whenever the variant needs them.
    """
    variant = VariantId.parse(variant) if isinstance(variant, str) else variant
    T = instance.horizon
    found: list[Finding] = []
    clusters = model_clusters(instance, variant)
    for c in clusters:
        try:
            cs = schedule.clusters[c.id]
        except KeyError:
            raise ScheduleError(f"schedule has no cluster {c.id}") from None
        if variant.slotted and not cs.has_slots:
            raise ScheduleError(f"{variant.value} needs slot trajectories for {c.id}")
        if len(cs.u) != T:
            raise ScheduleError(f"cluster {c.id}: expected {T} periods, got {len(cs.u)}")
        col = _Collector(cluster_tags(c, variant) | {"bounds"})
        _check_cluster(col, c, cs)
        found += col.found

    renewable = np.array(instance.renewable_profile or (0.0,) * T)
    col = _Collector({"sysbal", "sysrup", "sysrdn", "bounds"})
    supply = sum(schedule.clusters[c.id].p_hat for c in clusters)
    col.eq("sysbal", None, supply + renewable - schedule.curtail + schedule.shed, np.array(instance.demand))
    r_up = sum(schedule.clusters[c.id].r_plus for c in clusters)
    r_dn = sum(schedule.clusters[c.id].r_minus for c in clusters)
    col.le("sysrup", None, np.array(instance.reserve_up_req), r_up + schedule.short_up)
    col.le("sysrdn", None, np.array(instance.reserve_down_req), r_dn + schedule.short_dn)
    for name in ("shed", "curtail", "short_up", "short_dn"):
        col.le("bounds", None, -getattr(schedule, name), 0.0)
    col.le("bounds", None, schedule.curtail, renewable)
    return found + col.found


def projection_violations(instance: SystemInstance, schedule: Schedule) -> list[Finding]:
    """Classic cluster rows (eq07, eq09, eq10) evaluated on a slotted schedule.

    The slot rows imply them, so any finding here points at a modelling bug.
    """
    found = []
    for c in instance.clusters:
        col = _Collector({"eq07", "eq09", "eq10"})
        _check_cluster(col, c, schedule.clusters[c.id])
        found += col.found
    return found
