"""Unit-commitment instances: data model, validation, generation and JSON IO.

Time steps are one hour, so MW and MWh are used interchangeably. Initial
conditions default to an empty fleet; units are assumed to have sat in their
initial state long enough that minimum up/down times do not reach back
before the first period.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

__all__ = [
    "ClusterSpec",
    "SystemInstance",
    "GeneratorConfig",
    "Violation",
    "InstanceError",
    "InstanceParseError",
    "InstanceSchemaError",
    "InstanceValidationError",
    "ConfigError",
    "validate_instance",
    "generate_random_instance",
    "build_ramp_trap_instance",
    "parse_instance",
    "serialize_instance",
    "load_instance",
    "save_instance",
    "with_reserve_fraction",
]

_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")


class InstanceError(ValueError):
    pass


class InstanceParseError(InstanceError):
    def __init__(self, msg: str, line: int, column: int):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


class InstanceSchemaError(InstanceError):
    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


class InstanceValidationError(InstanceError):
    def __init__(self, report: list["Violation"]):
        super().__init__("; ".join(str(v) for v in report))
        self.report = report


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterSpec:
    """A group of ``unit_count`` identical thermal units.

    Capacities and ramp rates are per unit. ``init_power_above_min`` is the
    cluster total above minimum output at t=0.
    """

    id: str
    unit_count: int
    p_max: float
    p_min: float
    ramp_up: float
    ramp_down: float
    su_cap: float
    sd_cap: float
    min_up: int
    min_down: int
    cost_fixed: float = 0.0
    cost_variable: float = 0.0
    cost_startup: float = 0.0
    cost_shutdown: float = 0.0
    init_online: int = 0
    init_power_above_min: float = 0.0

    @property
    def span(self) -> float:
        """Output range above minimum, P̄ - P_."""
        return self.p_max - self.p_min


@dataclass(frozen=True)
class SystemInstance:
    horizon: int
    demand: tuple[float, ...]
    reserve_up_req: tuple[float, ...]
    reserve_down_req: tuple[float, ...]
    clusters: tuple[ClusterSpec, ...]
    renewable_profile: tuple[float, ...] | None = None
    cost_curtailment: float = 0.0
    cost_shed: float = 1e4
    cost_reserve_shortfall: float = 5e3

    def __post_init__(self):
        object.__setattr__(self, "demand", tuple(float(x) for x in self.demand))
        object.__setattr__(self, "reserve_up_req", tuple(float(x) for x in self.reserve_up_req))
        object.__setattr__(self, "reserve_down_req", tuple(float(x) for x in self.reserve_down_req))
        object.__setattr__(self, "clusters", tuple(self.clusters))
        if self.renewable_profile is not None:
            object.__setattr__(
                self, "renewable_profile", tuple(float(x) for x in self.renewable_profile)
            )

    @property
    def periods(self) -> range:
        return range(1, self.horizon + 1)

    @property
    def n_units(self) -> int:
        return sum(c.unit_count for c in self.clusters)

    def cluster(self, cid: str) -> ClusterSpec:
        for c in self.clusters:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def digest(self) -> str:
        """Short content hash, used as the instance id in model metadata."""
        return hashlib.sha256(serialize_instance(self).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class Violation:
    field: str
    cluster: str | None
    rule: str

    def __str__(self):
        where = f"cluster {self.cluster}: " if self.cluster else ""
        return f"{where}{self.field}: {self.rule}"


def _cluster_violations(c: ClusterSpec) -> list[Violation]:
    out = []

    def check(ok, fld, rule):
        if not ok:
            out.append(Violation(fld, c.id, rule))

    check(bool(_ID_RE.match(c.id)), "id", "id must match [A-Za-z0-9_-]+")
    check(c.unit_count >= 1, "unit_count", "G < 1")
    check(c.p_min >= 0, "p_min", "P_ < 0")
    check(c.p_min <= c.p_max, "p_max", "P̄ < P_")
    check(c.su_cap >= c.p_min, "su_cap", "SU < P_")
    check(c.su_cap <= c.p_max, "su_cap", "SU > P̄")
    check(c.sd_cap >= c.p_min, "sd_cap", "SD < P_")
    check(c.sd_cap <= c.p_max, "sd_cap", "SD > P̄")
    check(c.ramp_up > 0, "ramp_up", "RU <= 0")
    check(c.ramp_down > 0, "ramp_down", "RD <= 0")
    check(c.min_up >= 1, "min_up", "TU < 1")
    check(c.min_down >= 1, "min_down", "TD < 1")
    check(c.init_online >= 0, "init_online", "u0 < 0")
    check(c.init_online <= c.unit_count, "init_online", "u0 > G")
    check(c.init_power_above_min >= 0, "init_power_above_min", "p0 < 0")
    check(
        c.init_power_above_min <= c.span * c.init_online + 1e-9,
        "init_power_above_min",
        "p0 > (P̄ - P_) u0",
    )
    for name in ("cost_fixed", "cost_variable", "cost_startup", "cost_shutdown"):
        value = getattr(c, name)
        check(math.isfinite(value), name, "not finite")
    return out


def validate_instance(instance: SystemInstance) -> list[Violation]:
    """Return every broken invariant; an empty list means the instance is valid."""
    report: list[Violation] = []
    T = instance.horizon
    if T < 1:
        report.append(Violation("horizon", None, "T < 1"))
    series = {
        "demand": instance.demand,
        "reserve_up_req": instance.reserve_up_req,
        "reserve_down_req": instance.reserve_down_req,
    }
    if instance.renewable_profile is not None:
        series["renewable_profile"] = instance.renewable_profile
    for name, values in series.items():
        if len(values) != T:
            report.append(Violation(name, None, f"length {len(values)} != T={T}"))
        if any(not (v >= 0 and math.isfinite(v)) for v in values):
            report.append(Violation(name, None, "entry < 0 or not finite"))
    for name in ("cost_curtailment", "cost_shed", "cost_reserve_shortfall"):
        if not getattr(instance, name) >= 0:
            report.append(Violation(name, None, "penalty < 0"))
    if not instance.clusters:
        report.append(Violation("clusters", None, "no clusters"))
    ids = [c.id for c in instance.clusters]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        report.append(Violation("id", dup, "duplicate cluster id"))
    for c in instance.clusters:
        report.extend(_cluster_violations(c))
    return report


# --------------------------------------------------------------------------- JSON

_TOP_KEYS = (
    "horizon",
    "demand",
    "reserve_up_req",
    "reserve_down_req",
    "cost_curtailment",
    "cost_shed",
    "cost_reserve_shortfall",
    "renewable_profile",
    "clusters",
)
_CLUSTER_KEYS = tuple(f.name for f in fields(ClusterSpec))
_INT_CLUSTER_KEYS = {"unit_count", "min_up", "min_down", "init_online"}


def _to_dict(instance: SystemInstance) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "horizon": instance.horizon,
        "demand": list(instance.demand),
        "reserve_up_req": list(instance.reserve_up_req),
        "reserve_down_req": list(instance.reserve_down_req),
        "cost_curtailment": instance.cost_curtailment,
        "cost_shed": instance.cost_shed,
        "cost_reserve_shortfall": instance.cost_reserve_shortfall,
    }
    if instance.renewable_profile is not None:
        doc["renewable_profile"] = list(instance.renewable_profile)
    doc["clusters"] = [{k: getattr(c, k) for k in _CLUSTER_KEYS} for c in instance.clusters]
    return doc


def serialize_instance(instance: SystemInstance) -> str:
    """Canonical JSON text; floats keep full (round-trip) precision."""
    return json.dumps(_to_dict(instance), indent=2) + "\n"


def _number(value, name, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceSchemaError(name, f"expected a number, got {type(value).__name__}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise InstanceSchemaError(name, "expected an integer")
        return int(value)
    return float(value)


def _series(value, name):
    if not isinstance(value, list):
        raise InstanceSchemaError(name, "expected an array of numbers")
    return tuple(_number(v, f"{name}[{i}]") for i, v in enumerate(value))


def parse_instance(text: str, validate: bool = True) -> SystemInstance:
    """Parse an instance JSON document.

    Raises :class:`InstanceParseError` for malformed JSON (with line and
    column), :class:`InstanceSchemaError` naming the offending key, and
    :class:`InstanceValidationError` when the instance breaks an invariant.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise InstanceSchemaError("<root>", "expected a JSON object")

    unknown = set(doc) - set(_TOP_KEYS)
    if unknown:
        raise InstanceSchemaError(sorted(unknown)[0], "unknown field")
    for key in _TOP_KEYS:
        if key != "renewable_profile" and key not in doc:
            raise InstanceSchemaError(key, "missing required field")

    clusters = []
    if not isinstance(doc["clusters"], list):
        raise InstanceSchemaError("clusters", "expected an array of objects")
    for i, raw in enumerate(doc["clusters"]):
        where = f"clusters[{i}]"
        if not isinstance(raw, dict):
            raise InstanceSchemaError(where, "expected an object")
        unknown = set(raw) - set(_CLUSTER_KEYS)
        if unknown:
            raise InstanceSchemaError(f"{where}.{sorted(unknown)[0]}", "unknown field")
        missing = [k for k in _CLUSTER_KEYS if k not in raw]
        if missing:
            raise InstanceSchemaError(f"{where}.{missing[0]}", "missing required field")
        if not isinstance(raw["id"], str):
            raise InstanceSchemaError(f"{where}.id", "expected a string")
        values = {"id": raw["id"]}
        for key in _CLUSTER_KEYS[1:]:
            values[key] = _number(raw[key], f"{where}.{key}", key in _INT_CLUSTER_KEYS)
        clusters.append(ClusterSpec(**values))

    renewable = doc.get("renewable_profile")
    instance = SystemInstance(
        horizon=_number(doc["horizon"], "horizon", integer=True),
        demand=_series(doc["demand"], "demand"),
        reserve_up_req=_series(doc["reserve_up_req"], "reserve_up_req"),
        reserve_down_req=_series(doc["reserve_down_req"], "reserve_down_req"),
        clusters=tuple(clusters),
        renewable_profile=None if renewable is None else _series(renewable, "renewable_profile"),
        cost_curtailment=_number(doc["cost_curtailment"], "cost_curtailment"),
        cost_shed=_number(doc["cost_shed"], "cost_shed"),
        cost_reserve_shortfall=_number(doc["cost_reserve_shortfall"], "cost_reserve_shortfall"),
    )
    if validate:
        report = validate_instance(instance)
        if report:
            raise InstanceValidationError(report)
    return instance


def load_instance(path: str | Path) -> SystemInstance:
    return parse_instance(Path(path).read_text())


def save_instance(instance: SystemInstance, path: str | Path) -> None:
    Path(path).write_text(serialize_instance(instance))


def with_reserve_fraction(instance: SystemInstance, fraction: float) -> SystemInstance:
    """Replace both reserve series with ``fraction`` times demand."""
    if fraction < 0:
        raise ValueError("reserve fraction must be >= 0")
    req = tuple(fraction * d for d in instance.demand)
    return replace(instance, reserve_up_req=req, reserve_down_req=req)


# --------------------------------------------------------------------------- generation


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for :func:`generate_random_instance`.

    Capacity and cost ranges are absolute. Ramp rates and startup/shutdown
    capabilities are drawn as fractions of each cluster's span P̄ - P_
    (SU = P_ + frac * span), which keeps every draw inside the ClusterSpec
    invariants by construction.

    By default the fleet starts from a merit-order dispatch of the first
    hour's demand. Setting ``init_online_frac_range`` instead draws a random
    number of online units per cluster, all at minimum output.

    With ``spread_variable_costs`` each cluster draws its variable cost from
    its own equal slice of ``cost_variable_range``. Near-identical marginal
    costs across clusters make the individual-unit reference model very slow
    to prove optimal, without telling the formulations apart any better.
    """

    seed: int = 0
    n_clusters: int = 3
    units_per_cluster: int = 3
    horizon: int = 24
    p_max_range: tuple[float, float] = (100.0, 400.0)
    p_min_range: tuple[float, float] = (20.0, 80.0)
    ramp_up_frac_range: tuple[float, float] = (0.15, 0.5)
    ramp_down_frac_range: tuple[float, float] = (0.15, 0.5)
    su_frac_range: tuple[float, float] = (0.1, 0.6)
    sd_frac_range: tuple[float, float] = (0.1, 0.6)
    min_up_range: tuple[int, int] = (1, 4)
    min_down_range: tuple[int, int] = (1, 4)
    cost_fixed_range: tuple[float, float] = (100.0, 800.0)
    cost_variable_range: tuple[float, float] = (10.0, 60.0)
    spread_variable_costs: bool = True
    cost_startup_range: tuple[float, float] = (200.0, 3000.0)
    cost_shutdown_range: tuple[float, float] = (0.0, 300.0)
    init_online_frac_range: tuple[float, float] | None = None
    peak_to_base: float = 1.8
    capacity_margin: float = 1.2
    reserve_fraction: float = 0.05
    renewable_share: float = 0.0
    cost_curtailment: float = 0.0
    cost_shed: float = 1e4
    cost_reserve_shortfall: float = 5e3
    cost_noise_pct: float = 0.0

    def check(self) -> None:
        for f in fields(self):
            if f.name.endswith("_range") and getattr(self, f.name) is not None:
                lo, hi = getattr(self, f.name)
                if lo > hi:
                    raise ConfigError(f"{f.name}: empty range ({lo} > {hi})")
        if self.p_min_range[1] > self.p_max_range[0]:
            raise ConfigError("p_min_range reaches above p_max_range; P_ <= P̄ not guaranteed")
        if self.p_min_range[0] < 0:
            raise ConfigError("p_min_range must be >= 0")
        if self.p_max_range[0] <= 0:
            raise ConfigError("p_max_range must be > 0")
        for name in ("ramp_up_frac_range", "ramp_down_frac_range"):
            if getattr(self, name)[0] <= 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("su_frac_range", "sd_frac_range", "init_online_frac_range"):
            if getattr(self, name) is None:
                continue
            lo, hi = getattr(self, name)
            if lo < 0 or hi > 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.min_up_range[0] < 1 or self.min_down_range[0] < 1:
            raise ConfigError("minimum up/down ranges must start at >= 1")
        if self.n_clusters < 1 or self.units_per_cluster < 1 or self.horizon < 1:
            raise ConfigError("n_clusters, units_per_cluster and horizon must be >= 1")
        if self.peak_to_base < 1:
            raise ConfigError("peak_to_base must be >= 1")
        if self.capacity_margin < 1:
            raise ConfigError("capacity_margin must be >= 1")
        if self.reserve_fraction < 0 or self.renewable_share < 0 or self.cost_noise_pct < 0:
            raise ConfigError("reserve_fraction, renewable_share and cost_noise_pct must be >= 0")


def _demand_shape(horizon: int, rng: np.random.Generator) -> np.ndarray:
    # two daily humps (morning, evening) plus a little noise, scaled to [0, 1]
    t = np.arange(horizon, dtype=float)
    hour = t % 24
    shape = 0.6 * np.exp(-0.5 * ((hour - 10.0) / 3.0) ** 2) + np.exp(
        -0.5 * ((hour - 19.0) / 2.5) ** 2
    )
    shape = shape + rng.normal(0.0, 0.03, size=horizon)
    lo, hi = shape.min(), shape.max()
    return (shape - lo) / (hi - lo) if hi > lo else np.zeros(horizon)


def _merit_order_start(clusters: list[ClusterSpec], load: float) -> list[ClusterSpec]:
    """Commit whole units in order of average cost until ``load`` is covered,
    then share the output above minimum in proportion to committed span."""
    order = sorted(range(len(clusters)), key=lambda k: clusters[k].cost_variable
                   + clusters[k].cost_fixed / clusters[k].p_max)
    online = [0] * len(clusters)
    covered = 0.0
    for k in order:
        c = clusters[k]
        while online[k] < c.unit_count and covered < load:
            online[k] += 1
            covered += c.p_max
    floor = sum(c.p_min * n for c, n in zip(clusters, online))
    room = sum(c.span * n for c, n in zip(clusters, online))
    share = min(max(load - floor, 0.0) / room, 1.0) if room > 0 else 0.0
    return [
        replace(c, init_online=n, init_power_above_min=math.floor(share * c.span * n * 100) / 100)
        for c, n in zip(clusters, online)
    ]


def generate_random_instance(cfg: GeneratorConfig) -> SystemInstance:
    """Deterministic synthetic instance for a given config (and seed)."""
    cfg.check()
    rng = np.random.default_rng(cfg.seed)

    def draw(rng_range):
        lo, hi = rng_range
        return float(rng.uniform(lo, hi))

    def draw_int(rng_range):
        lo, hi = rng_range
        return int(rng.integers(lo, hi + 1))

    def variable_cost(k):
        if not cfg.spread_variable_costs:
            return draw(cfg.cost_variable_range)
        # cluster k gets the k-th slice of the range, so the merit order is clear-cut
        lo, hi = cfg.cost_variable_range
        width = (hi - lo) / cfg.n_clusters
        return lo + width * (k + float(rng.uniform()))

    clusters = []
    for k in range(cfg.n_clusters):
        p_max = round(draw(cfg.p_max_range), 1)
        p_min = round(draw(cfg.p_min_range), 1)
        span = p_max - p_min
        G = cfg.units_per_cluster
        clusters.append(
            ClusterSpec(
                id=f"c{k + 1}",
                unit_count=G,
                p_max=p_max,
                p_min=p_min,
                ramp_up=round(max(draw(cfg.ramp_up_frac_range) * span, 0.1), 1),
                ramp_down=round(max(draw(cfg.ramp_down_frac_range) * span, 0.1), 1),
                su_cap=round(p_min + draw(cfg.su_frac_range) * span, 1),
                sd_cap=round(p_min + draw(cfg.sd_frac_range) * span, 1),
                min_up=draw_int(cfg.min_up_range),
                min_down=draw_int(cfg.min_down_range),
                cost_fixed=round(draw(cfg.cost_fixed_range), 2),
                cost_variable=round(variable_cost(k), 2),
                cost_startup=round(draw(cfg.cost_startup_range), 2),
                cost_shutdown=round(draw(cfg.cost_shutdown_range), 2),
            )
        )

    capacity = sum(c.p_max * c.unit_count for c in clusters)
    peak = capacity / cfg.capacity_margin
    base = peak / cfg.peak_to_base
    demand = base + (peak - base) * _demand_shape(cfg.horizon, rng)
    demand = np.floor(np.clip(demand, 0.0, peak) * 100) / 100

    if cfg.init_online_frac_range is None:
        clusters = _merit_order_start(clusters, float(demand[0]) * (1 + cfg.reserve_fraction))
    else:
        clusters = [
            replace(c, init_online=int(round(draw(cfg.init_online_frac_range) * c.unit_count)))
            for c in clusters
        ]

    renewable = None
    if cfg.renewable_share > 0:
        hour = np.arange(cfg.horizon) % 24
        solar = np.clip(np.sin(np.pi * (hour - 6) / 12), 0.0, None)
        renewable = tuple(np.round(cfg.renewable_share * peak * solar, 2).tolist())

    reserve = tuple(np.round(cfg.reserve_fraction * demand, 4).tolist())
    instance = SystemInstance(
        horizon=cfg.horizon,
        demand=tuple(demand.tolist()),
        reserve_up_req=reserve,
        reserve_down_req=reserve,
        clusters=tuple(clusters),
        renewable_profile=renewable,
        cost_curtailment=cfg.cost_curtailment,
        cost_shed=cfg.cost_shed,
        cost_reserve_shortfall=cfg.cost_reserve_shortfall,
    )
    report = validate_instance(instance)
    if report:  # pragma: no cover - guarded by cfg.check()
        raise ConfigError(f"generated instance is invalid: {report}")
    return instance


def build_ramp_trap_instance(units: int = 10) -> SystemInstance:
    """Single base-load cluster whose committed units are pinned at full output.

    ``units - 1`` units start online at P̄; the last one starts up in hour 1
    and, capped by its startup capability, sits well below P̄. Hour 2 brings
    a demand step larger than one unit's ramp but smaller than ``units``
    times it. The scaled cluster ramp admits the step; the individual units
    cannot follow, so meeting it needs the expensive one-unit peaker cluster.
    """
    if units < 2:
        raise ValueError("the trap needs at least two units")
    p_max, p_min, ramp = 100.0, 20.0, 20.0
    su = 30.0
    step = 60.0 if units >= 4 else 50.0  # strictly inside (RU, units * RU)
    online = units - 1
    plateau = online * p_max + su
    base = ClusterSpec(
        id="base",
        unit_count=units,
        p_max=p_max,
        p_min=p_min,
        ramp_up=ramp,
        ramp_down=ramp,
        su_cap=su,
        sd_cap=su,
        min_up=2,
        min_down=2,
        cost_fixed=50.0,
        cost_variable=10.0,
        cost_startup=200.0,
        cost_shutdown=0.0,
        init_online=online,
        init_power_above_min=online * (p_max - p_min),
    )
    peaker = ClusterSpec(
        id="peaker",
        unit_count=1,
        p_max=100.0,
        p_min=10.0,
        ramp_up=100.0,
        ramp_down=100.0,
        su_cap=100.0,
        sd_cap=100.0,
        min_up=1,
        min_down=1,
        cost_fixed=500.0,
        cost_variable=100.0,
        cost_startup=2000.0,
        cost_shutdown=0.0,
    )
    demand = (plateau, plateau + step, plateau + step)
    zeros = (0.0,) * len(demand)
    return SystemInstance(
        horizon=len(demand),
        demand=demand,
        reserve_up_req=zeros,
        reserve_down_req=zeros,
        clusters=(base, peaker),
        cost_curtailment=0.0,
        cost_shed=5e3,
        cost_reserve_shortfall=5e3,
    )
