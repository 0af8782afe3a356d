import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucflex.formulation import VariantId, build_formulation
from ucflex.instance import ClusterSpec, SystemInstance
from ucflex.milp import (
    LinearConstraint,
    ModelError,
    Sense,
    Variable,
    VarKind,
    assemble_model,
    evaluate_point,
    fix_variables,
    model_statistics,
    relax_integrality,
    to_matrix_form,
)


def minimal():
    return assemble_model([Variable("x", VarKind.BINARY, 0, 1)], [], {"x": 1.0})


def min_x_ge_2():
    return assemble_model(
        [Variable("x")],
        [LinearConstraint("c1", (("x", 1.0),), Sense.GE, 2.0, "c")],
        {"x": 1.0},
    )


def test_minimal_model_and_stats():
    m = minimal()
    assert m.variable("x").kind is VarKind.BINARY
    s = model_statistics(m)
    assert (s.n_binary, s.n_integer, s.n_continuous, s.n_constraints, s.n_nonzeros) == (1, 0, 0, 0, 0)


def test_dangling_reference():
    with pytest.raises(ModelError, match="q"):
        assemble_model([Variable("x")], [LinearConstraint("c", (("q", 1.0),), Sense.LE, 0.0)], {})
    with pytest.raises(ModelError, match="q"):
        assemble_model([Variable("x")], [], {"q": 1.0})


def test_duplicate_variable_name():
    with pytest.raises(ModelError, match="u_1"):
        assemble_model([Variable("u_1"), Variable("u_1")], [], {})


def test_variable_invariants():
    with pytest.raises(ModelError):
        Variable("x", lower=2.0, upper=1.0)
    with pytest.raises(ModelError):
        Variable("b", VarKind.BINARY, 0.0, 2.0)
    with pytest.raises(ModelError):
        LinearConstraint("c", (("x", 1.0), ("x", 2.0)), Sense.LE, 0.0)


def test_evaluate_feasible_point():
    ev = evaluate_point(min_x_ge_2(), {"x": 2.0})
    assert ev.objective == 2.0
    assert ev.violations == [] and ev.feasible


def test_evaluate_violation_amount():
    ev = evaluate_point(min_x_ge_2(), {"x": 1.0})
    assert ev.violations == [("c1", 1.0)]


def test_evaluate_integrality():
    ev = evaluate_point(minimal(), {"x": 0.5})
    assert ev.integrality_violations == [("x", 0.5)]
    assert evaluate_point(minimal(), {"x": 1.0 + 5e-7}).integrality_violations == []


def test_evaluate_tolerance_is_absolute_1e6():
    m = min_x_ge_2()
    assert evaluate_point(m, {"x": 2.0 - 9e-7}).violations == []
    assert evaluate_point(m, {"x": 2.0 - 2e-6}).violations != []


def test_evaluate_missing_assignment():
    with pytest.raises(KeyError, match="x"):
        evaluate_point(min_x_ge_2(), {})


def three_binaries():
    vs = [Variable(f"b{i}", VarKind.BINARY, 0, 1) for i in range(3)] + [Variable("x")]
    cons = [LinearConstraint("sum", tuple((f"b{i}", 1.0) for i in range(3)), Sense.LE, 2.0)]
    return assemble_model(vs, cons, {"x": 1.0, "b0": 2.0})


def test_relax_integrality():
    m = three_binaries()
    r = relax_integrality(m)
    s, sr = model_statistics(m), model_statistics(r)
    assert sr.n_binary == 0 and sr.n_continuous == s.n_continuous + 3
    assert sr.n_constraints == s.n_constraints
    assert r.constraints == m.constraints and r.objective == m.objective
    assert [(v.lower, v.upper) for v in r.variables] == [(v.lower, v.upper) for v in m.variables]
    assert relax_integrality(r) == r


def test_fix_variables():
    m = fix_variables(three_binaries(), {"b1": 1.0})
    assert (m.variable("b1").lower, m.variable("b1").upper) == (1.0, 1.0)
    with pytest.raises(ModelError):
        fix_variables(m, {"nope": 0.0})


def test_matrix_form_senses():
    m = assemble_model(
        [Variable("x"), Variable("y", lower=-math.inf)],
        [
            LinearConstraint("a", (("x", 1.0), ("y", 2.0)), Sense.LE, 4.0),
            LinearConstraint("b", (("x", 1.0),), Sense.EQ, 1.0),
            LinearConstraint("c", (("y", 3.0),), Sense.GE, -1.0),
        ],
        {"x": 1.0},
    )
    f = to_matrix_form(m)
    assert f.A.toarray().tolist() == [[1.0, 2.0], [1.0, 0.0], [0.0, 3.0]]
    assert f.row_lo.tolist() == [-math.inf, 1.0, -1.0]
    assert f.row_hi.tolist() == [4.0, 1.0, math.inf]
    assert f.lb.tolist() == [0.0, -math.inf]


# ------------------------------------------------------------------ formulation counts


def cluster(G, TU=2):
    return ClusterSpec("c1", G, 100.0, 20.0, 30.0, 30.0, 40.0, 40.0, TU, 1, 1.0, 1.0, 1.0, 0.0)


def inst(G, T, TU=2):
    z = (0.0,) * T
    return SystemInstance(T, (50.0,) * T, z, z, (cluster(G, TU),))


def test_pcuc_counts_g3_t24():
    s = model_statistics(build_formulation(inst(3, 24), VariantId.PCUC))
    assert s.n_binary == 3 * 24
    assert s.n_integer == 3 * 24


def test_ccuc_counts_g3_t24():
    s = model_statistics(build_formulation(inst(3, 24), VariantId.CCUC))
    assert s.n_binary == 0
    assert s.n_integer == 3 * 24


@settings(max_examples=25, deadline=None)
@given(G=st.integers(1, 4), T=st.integers(1, 8), TU=st.integers(1, 3),
       variant=st.sampled_from(list(VariantId)))
def test_nonzeros_equal_term_count(G, T, TU, variant):
    m = build_formulation(inst(G, T, TU), variant)
    assert model_statistics(m).n_nonzeros == sum(len(c.terms) for c in m.constraints)
    assert model_statistics(relax_integrality(m)).n_constraints == len(m.constraints)
