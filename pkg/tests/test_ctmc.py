import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sspa import library
from sspa.ctmc import (
    RateExpr, build_generator, check_irreducible, enumerate_states, evaluate_generator,
    generator_dict, generator_json, matrix_text, numeric_generator, rate_labelled, rate_total,
    solve_invariant,
)
from sspa.errors import BudgetExceeded, MissingVariable, ReducibleChainError
from sspa.semantics import apply_closure, apply_closure_set, is_closed, passive_labels, resolve
from sspa.syntax import Ident

from conftest import model, nullspace_measure

SHARED_M = "M = (a,?).(b,1.0).M + (a,?).(c,?).M;"
CYCLE = "A0 = (a,1.0).(b,?).(a,2.0).(b,?).A0;"


def test_cycle_state_count():
    space = enumerate_states(Ident("A0"), model(CYCLE))
    assert space.names() == ["A0", "A0#1", "A0#2", "A0#3"]


def test_cell_state_count(bio):
    assert len(enumerate_states(Ident("C0"), bio)) == 4
    assert len(enumerate_states(resolve(bio, "Cell"), bio)) <= 16


def test_enumeration_is_deterministic(bio):
    a = enumerate_states(resolve(bio, "Cell"), bio).names()
    b = enumerate_states(resolve(library.load("biological"), "Cell"), library.load("biological")).names()
    assert a == b


# -- rate expressions ------------------------------------------------------------

def test_rate_expr_arithmetic():
    e = RateExpr(3.0, {"a": 2.0})
    assert str(e) == "2x_a + 3"
    assert str(-e) == "-2x_a - 3"
    assert (e + RateExpr(0, {"a": -2.0})) == 3.0
    assert e.evaluate({"a": 0.5}) == 4.0
    with pytest.raises(MissingVariable):
        e.evaluate({})


def test_rate_total_examples():
    m = model("X = (a,1.0).Y + (a,1.0).Y + (b,3.0).Z + (a,?).Z; Y = 0; Z = 0;")
    space = enumerate_states(Ident("X"), m)
    trs = space.transitions[0]
    assert rate_total(trs, Ident("X"), Ident("Y")) == 2.0
    assert rate_total(trs, Ident("X"), Ident("Z")) == RateExpr(3.0, {"a": 1.0})
    assert rate_total(space.transitions[1], Ident("Y"), Ident("Z")).is_zero()
    with pytest.raises(ValueError):
        rate_total(trs, Ident("X"), Ident("X"))


def test_rate_labelled_self_loop(bio):
    closed = apply_closure(Ident("C1"), "a", 2.0)
    space = enumerate_states(closed, bio)
    i = space.index[closed]
    assert rate_labelled(space.transitions[i], closed, closed, "c") == 2.0
    assert rate_labelled(space.transitions[i], closed, closed, "e").is_zero()


@pytest.mark.parametrize("name", library.bundled_names())
def test_rate_total_is_sum_over_labels(name):
    m = library.load(name)
    labels = sorted(m.labels())
    for p in list(m.process_names()) + list(m.systems):
        space = enumerate_states(resolve(m, p), m)
        for i, src in enumerate(space.states):
            for j, tgt in enumerate(space.states):
                if i == j:
                    continue
                total = RateExpr()
                for a in labels:
                    total = total + rate_labelled(space.transitions[i], src, tgt, a)
                assert rate_total(space.transitions[i], src, tgt) == total


# -- generators -------------------------------------------------------------------

def test_shared_passive_variable():
    space = enumerate_states(Ident("M"), model(SHARED_M))
    g = build_generator(space)
    assert g.to_strings()[0] == ["-2x_a", "x_a", "x_a"]
    assert g.variables == {"a", "c"}
    Q = evaluate_generator(g, {"a": 2.0, "c": 1.0})
    assert Q[0].tolist() == [-4.0, 2.0, 2.0]
    assert np.abs(Q.sum(axis=1)).max() <= 1e-12
    with pytest.raises(MissingVariable):
        evaluate_generator(g, {"a": 1.0})


def test_two_state_cycle():
    Q = numeric_generator(enumerate_states(Ident("X"), model("X = (a,1.0).Y; Y = (b,2.0).X;")))
    assert Q.tolist() == [[-1.0, 1.0], [2.0, -2.0]]


def test_closed_cycle_generator():
    m = model(CYCLE)
    space = enumerate_states(apply_closure(Ident("A0"), "b", 3.0), m)
    Q = numeric_generator(space)
    expected = [[-1, 1, 0, 0], [0, -3, 3, 0], [0, 0, -2, 2], [3, 0, 0, -3]]
    assert Q.tolist() == expected
    assert check_irreducible(space)


def test_numeric_generator_identity(bio):
    g = build_generator(enumerate_states(Ident("E0"), bio))
    assert g.is_numeric()
    assert evaluate_generator(g).tolist() == evaluate_generator(g, {"z": 5.0}).tolist()


@pytest.mark.parametrize("name", library.bundled_names())
def test_row_sums_vanish(name):
    m = library.load(name)
    for p in list(m.process_names()) + list(m.systems):
        t = resolve(m, p)
        space = enumerate_states(t, m)
        g = build_generator(space)
        Q = evaluate_generator(g, {a: 1.7 for a in g.variables})
        assert np.abs(Q.sum(axis=1)).max() <= 1e-12


SELF_LOOP_MODELS = [
    ("X = (a,1.0).Y + (b,2.0).Z; Y = (a,3.0).X; Z = (b,0.5).X;",
     "X = (a,1.0).Y + (b,2.0).Z + (a,4.0).X; Y = (a,3.0).X; Z = (b,0.5).X;", "X", "a"),
    ("E0 = (a,1.0).E1; E1 = (d,2.0).E0;",
     "E0 = (a,1.0).E1 + (a,2.0).E0; E1 = (d,2.0).E0;", "E0", "a"),
]


@pytest.mark.parametrize("plain, looped, state, label", SELF_LOOP_MODELS)
def test_self_loop_neutrality(plain, looped, state, label):
    s1 = enumerate_states(Ident(state), model(plain))
    s2 = enumerate_states(Ident(state), model(looped))
    Q1, Q2 = numeric_generator(s1), numeric_generator(s2)
    assert np.array_equal(Q1, Q2)
    assert np.array_equal(solve_invariant(Q1).values, solve_invariant(Q2).values)
    t = Ident(state)
    assert rate_labelled(s1.transitions[0], t, t, label).is_zero()
    assert not rate_labelled(s2.transitions[0], t, t, label).is_zero()


# -- irreducibility and solving -------------------------------------------------------

def test_disjoint_cycles_reducible():
    Q = np.array([[-1, 1, 0, 0], [1, -1, 0, 0], [0, 0, -2, 2], [0, 0, 2, -2]], float)
    with pytest.raises(ReducibleChainError) as exc:
        solve_invariant(Q)
    assert len(exc.value.components) == 2


def test_absorbing_state_reducible():
    space = enumerate_states(Ident("X"), model("X = (a,1.0).Y + (b,1.0).0; Y = (a,1.0).X;"))
    irr = check_irreducible(space)
    assert not irr and len(irr.components) == 2


@pytest.mark.parametrize("Q, pi", [
    ([[-1, 1], [1, -1]], [0.5, 0.5]),
    ([[-1, 1], [3, -3]], [0.75, 0.25]),
])
def test_two_state_measures(Q, pi):
    m = solve_invariant(np.array(Q, float))
    assert np.allclose(m.values, pi, atol=1e-15)


def test_energy_measure(bio):
    m = solve_invariant(numeric_generator(enumerate_states(Ident("E0"), bio)))
    assert np.allclose(m.values, [2 / 3, 1 / 3], rtol=1e-14)


def test_unnormalized_measure():
    m = solve_invariant(np.array([[-1.0, 1.0], [3.0, -3.0]]), normalize=False)
    assert m.values.tolist() == pytest.approx([1.0, 1 / 3])


def test_solve_budget():
    with pytest.raises(BudgetExceeded):
        solve_invariant(np.array([[-1.0, 1.0], [1.0, -1.0]]), budget=1)


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.tuples(st.integers(2, 8)).map(lambda t: (t[0], t[0])),
              elements=st.floats(0.1, 10.0)))
def test_solver_matches_nullspace(R):
    Q = R.copy()
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    m = solve_invariant(Q)
    assert abs(m.values.sum() - 1) < 1e-12
    assert m.residual <= 1e-10 * np.abs(Q).max()
    assert np.allclose(m.values, nullspace_measure(Q), rtol=1e-9, atol=1e-14)


def test_corpus_residuals():
    for name in library.bundled_names():
        m = library.load(name)
        for p in m.process_names():
            t = Ident(p)
            closed = apply_closure_set(t, {a: 1.3 for a in passive_labels(t, m)})
            assert is_closed(closed, m)
            space = enumerate_states(closed, m)
            if not check_irreducible(space):
                continue
            Q = numeric_generator(space)
            meas = solve_invariant(Q)
            assert meas.residual <= 1e-10 * np.abs(Q).max(), (name, p)


# -- export -------------------------------------------------------------------------------

def test_exports():
    space = enumerate_states(Ident("M"), model(SHARED_M))
    g = build_generator(space)
    d = generator_dict(g)
    assert d["states"] == ["M", "M#1", "M#2"]
    assert d["q"][0] == ["-2x_a", "x_a", "x_a"]
    assert json.loads(generator_json(g)) == d
    assert matrix_text(np.array([[-1.0, 1.0], [0.1, -0.1]])) == (
        "-1 1\n0.10000000000000001 -0.10000000000000001\n")
