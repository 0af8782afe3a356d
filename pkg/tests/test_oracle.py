from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucflex.formulation import VariantId, build_formulation
from ucflex.instance import ClusterSpec, SystemInstance, build_ramp_trap_instance
from ucflex.oracle import (
    OracleSizeError,
    brute_force_optimum,
    enumerate_commitment_patterns,
    unit_schedules,
)
from ucflex.solver_bridge import IN_PROCESS, Status, solve_model


def unit(G=1, TU=1, TD=1, **kw):
    base = dict(
        id="g", unit_count=G, p_max=50.0, p_min=10.0, ramp_up=50.0, ramp_down=50.0,
        su_cap=50.0, sd_cap=50.0, min_up=TU, min_down=TD, cost_fixed=5.0, cost_variable=2.0,
        cost_startup=100.0,
    )
    base.update(kw)
    return ClusterSpec(**base)


def system(clusters, demand, reserve=0.0):
    T = len(demand)
    return SystemInstance(T, tuple(demand), (reserve,) * T, (reserve,) * T, tuple(clusters))


def test_one_unit_two_periods_has_four_patterns():
    inst = system([unit()], [0.0, 0.0])
    assert len(list(enumerate_commitment_patterns(inst))) == 4


def test_min_up_excludes_short_runs():
    seqs = unit_schedules(unit(TU=2), 3)
    assert (0, 1, 0) not in seqs
    assert (0, 1, 1) in seqs
    assert (0, 0, 1) in seqs  # a run cut by the horizon is fine


def test_min_down_applies_to_initially_online_units():
    seqs = unit_schedules(unit(TD=2, init_online=1, init_power_above_min=0.0), 3)
    assert (0, 1, 1) not in seqs
    assert (1, 0, 0) in seqs


def test_symmetric_units_collapse_to_multisets():
    inst = system([unit(G=2)], [0.0, 0.0])
    patterns = list(enumerate_commitment_patterns(inst))
    assert len(patterns) == 10
    assert sum(p.multiplicity for p in patterns) == 16
    assert len(list(enumerate_commitment_patterns(inst, prune=False))) == 16


def test_zero_demand_costs_nothing():
    res = brute_force_optimum(system([unit(G=2)], [0.0, 0.0, 0.0]))
    assert res.objective == pytest.approx(0.0, abs=1e-9)
    assert not res.pattern.on.any()


def test_single_unit_example():
    c = unit(init_online=1, init_power_above_min=20.0)
    res = brute_force_optimum(system([c], [30.0, 40.0]))
    assert res.objective == pytest.approx(150.0)
    assert res.pattern.as_strings() == ("11",)


def test_size_guard():
    with pytest.raises(OracleSizeError):
        brute_force_optimum(system([unit(G=5)], [0.0]))
    with pytest.raises(OracleSizeError):
        brute_force_optimum(system([unit()], [0.0] * 9))


def test_reduced_trap_oracle_beats_classic_bound():
    """The classic clustered model is optimistic on the small trap; the oracle is not."""
    inst = build_ramp_trap_instance(3)
    res = brute_force_optimum(inst)
    ccuc = solve_model(build_formulation(inst, VariantId.CCUC), IN_PROCESS)
    pcuc = solve_model(build_formulation(inst, VariantId.PCUC), IN_PROCESS)
    assert ccuc.objective < res.objective * (1 - 5e-3)
    assert pcuc.objective == pytest.approx(res.objective, rel=1e-6)


random_cluster = st.builds(
    lambda G, TU, TD, pmax, frac, fixed, var, su_cost, on: unit(
        G=G, TU=TU, TD=TD, p_max=pmax, p_min=round(frac * pmax, 1), ramp_up=pmax, ramp_down=pmax,
        su_cap=pmax, sd_cap=pmax, cost_fixed=fixed, cost_variable=var, cost_startup=su_cost,
        init_online=on * G, init_power_above_min=0.0,
    ),
    G=st.integers(1, 2),
    TU=st.integers(1, 2),
    TD=st.integers(1, 2),
    pmax=st.sampled_from([40.0, 60.0, 90.0]),
    frac=st.sampled_from([0.1, 0.3]),
    fixed=st.sampled_from([0.0, 5.0, 40.0]),
    var=st.sampled_from([1.0, 3.0, 7.0]),
    su_cost=st.sampled_from([0.0, 50.0, 300.0]),
    on=st.integers(0, 1),
)


@settings(max_examples=15, deadline=None)
@given(
    a=random_cluster,
    b=random_cluster,
    demand=st.lists(st.sampled_from([0.0, 20.0, 55.0, 80.0]), min_size=1, max_size=3),
)
def test_pruning_is_sound(a, b, demand):
    b = replace(b, id="h", unit_count=1, init_online=min(b.init_online, 1))
    inst = system([replace(a, unit_count=2, init_online=a.init_online and 2), b], demand)
    pruned = brute_force_optimum(inst)
    full = brute_force_optimum(inst, prune=False)
    assert pruned.objective == pytest.approx(full.objective, rel=1e-9, abs=1e-9)
    assert pruned.n_raw == full.n_patterns


@settings(max_examples=15, deadline=None)
@given(
    a=random_cluster,
    demand=st.lists(st.sampled_from([0.0, 20.0, 55.0, 80.0]), min_size=1, max_size=5),
)
def test_iuc_matches_oracle(a, demand):
    inst = system([a], demand)
    res = brute_force_optimum(inst)
    out = solve_model(build_formulation(inst, VariantId.IUC), IN_PROCESS)
    assert out.status is Status.OPTIMAL
    assert out.objective == pytest.approx(res.objective, rel=1e-6, abs=1e-6)


def test_dispatch_is_consistent_with_pattern():
    inst = system([unit(G=2)], [60.0, 20.0])
    res = brute_force_optimum(inst)
    on = np.array([[res.dispatch[f"u[g.{k}][{t}]"] for t in (1, 2)] for k in (1, 2)])
    assert np.array_equal(on, res.pattern.on)
