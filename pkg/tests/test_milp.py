import itertools

import numpy as np
import pytest
import scipy.optimize as so
from hypothesis import given, settings
from hypothesis import strategies as st

from robolayout.milp import (EQ, GE, INFEASIBLE, LE, OPTIMAL, TIMEOUT, ModelBuilder, read_lp,
                             read_solution, solve_lp, solve_milp, write_lp, write_solution)
from robolayout.netmodel import build_network, compile_milp
from robolayout.pipeline import benchmark_scene
from robolayout.reach import build_reachability_graph

from conftest import make_scene


def model(c, rows, lb=None, ub=None, integer=False):
    b = ModelBuilder()
    for j, cj in enumerate(c):
        b.add_var(f"x{j}", cj, 0.0 if lb is None else lb[j], 1.0 if ub is None else ub[j], integer)
    for k, (coefs, sense, rhs) in enumerate(rows):
        b.add_row(f"r{k}", [(j, v) for j, v in enumerate(coefs) if v], sense, rhs)
    return b.build()


def test_lp_lower_bound_row():
    sol = solve_lp(model([1.0], [([1.0], GE, 3.0)], ub=[10.0]))
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(3.0) and sol.objective == pytest.approx(3.0)


def test_lp_simplex_corner():
    sol = solve_lp(model([-1.0, -1.0], [([1.0, 1.0], LE, 1.0)]))
    assert sol.objective == pytest.approx(-1.0)


def test_lp_infeasible():
    sol = solve_lp(model([1.0, 1.0], [([1.0, 1.0], GE, 3.0)]))
    assert sol.status == INFEASIBLE


def flow_model():
    scene = make_scene(((0, 0), (1.5, 0.5)), 0.5, (0, 0), [(1.5, 0.5)])
    return compile_milp(build_network(build_reachability_graph(scene), scene), scene)


def test_relaxation_bounds_integer_optimum():
    m = flow_model()
    lp = solve_lp(m)
    assert lp.status == OPTIMAL
    best = solve_milp(m)
    assert lp.objective <= best.objective + 1e-9


def test_integral_relaxation_needs_no_branching():
    m = model([1.0, 2.0], [([1.0, 1.0], GE, 1.0)], integer=True)
    sol = solve_milp(m)
    assert sol.status == OPTIMAL and sol.nodes == 1 and sol.objective == 1.0


def enumerate_binary(c, rows):
    best = np.inf
    for bits in itertools.product((0.0, 1.0), repeat=len(c)):
        x = np.array(bits)
        ok = all((s == LE and a @ x <= b + 1e-9) or (s == GE and a @ x >= b - 1e-9)
                 or (s == EQ and abs(a @ x - b) <= 1e-9) for a, s, b in
                 ((np.array(r[0]), r[1], r[2]) for r in rows))
        if ok:
            best = min(best, float(np.dot(c, x)))
    return best


def test_six_binary_selection():
    c = [3.0, -2.0, 4.0, -1.0, 2.5, 1.0]
    rows = [([1, 1, 0, 0, 1, 0], GE, 1.0), ([0, 1, 1, 1, 0, 0], LE, 2.0),
            ([1, 0, 1, 0, 0, 1], GE, 1.0), ([0, 3, 0, 2, 1, 1], LE, 4.0)]
    sol = solve_milp(model(c, rows, integer=True))
    assert sol.objective == pytest.approx(enumerate_binary(c, rows), abs=1e-9)


def test_unreachable_output_infeasible():
    scene = make_scene(((0, 0), (6, 0)), 3.0, (0, 0), [(6, 0)])
    m = compile_milp(build_network(build_reachability_graph(scene), scene), scene)
    assert solve_milp(m).status == INFEASIBLE


def test_timeout_reports_incumbent():
    scene = benchmark_scene(1, 3, resolution=0.5, size=5.0)
    m = compile_milp(build_network(build_reachability_graph(scene), scene), scene)
    sol = solve_milp(m, time_limit_s=1e-3)
    assert sol.status == TIMEOUT
    assert sol.x is None or np.all(np.abs(sol.x[m.is_int] - np.round(sol.x[m.is_int])) == 0)


def test_deterministic():
    m = flow_model()
    a, b = solve_milp(m), solve_milp(m)
    assert a.nodes == b.nodes and np.array_equal(a.x, b.x)


def test_lp_text_round_trip():
    m = flow_model()
    m2 = read_lp(write_lp(m))
    assert m2.var_names == m.var_names and m2.row_names == m.row_names
    assert (m2.A != m.A).nnz == 0
    assert np.array_equal(m2.c, m.c) and np.array_equal(m2.rhs, m.rhs)
    assert np.array_equal(m2.is_int, m.is_int)
    sol = solve_milp(m2)
    x = read_solution(write_solution(m2.var_names, sol.x, sol.objective, sol.status), m2.var_names)
    assert np.array_equal(x, sol.x)


@st.composite
def binary_models(draw, max_vars=10):
    n = draw(st.integers(2, max_vars))
    c = draw(st.lists(st.integers(-5, 5).map(float), min_size=n, max_size=n))
    rows = []
    for _ in range(draw(st.integers(1, 5))):
        coefs = draw(st.lists(st.integers(-3, 3).map(float), min_size=n, max_size=n))
        rows.append((coefs, draw(st.sampled_from([LE, GE, EQ])), float(draw(st.integers(-2, 4)))))
    return c, rows


@settings(max_examples=80, deadline=None)
@given(binary_models())
def test_milp_matches_enumeration(data):
    c, rows = data
    sol = solve_milp(model(c, rows, integer=True))
    expect = enumerate_binary(c, rows)
    if np.isinf(expect):
        assert sol.status == INFEASIBLE
    else:
        assert sol.status == OPTIMAL
        assert sol.objective == pytest.approx(expect, abs=1e-9)
        assert sol.bound <= sol.objective + 1e-6


@settings(max_examples=80, deadline=None)
@given(binary_models(max_vars=14))
def test_lp_matches_highs(data):
    c, rows = data
    m = model(c, rows)
    sol = solve_lp(m)
    A = m.A.toarray()
    ub_rows = [(A[i], m.rhs[i]) if s == LE else (-A[i], -m.rhs[i])
               for i, s in enumerate(m.sense) if s != EQ]
    eq = [i for i, s in enumerate(m.sense) if s == EQ]
    ref = so.linprog(m.c, A_ub=np.array([r[0] for r in ub_rows]) if ub_rows else None,
                     b_ub=np.array([r[1] for r in ub_rows]) if ub_rows else None,
                     A_eq=A[eq] if eq else None, b_eq=m.rhs[eq] if eq else None,
                     bounds=list(zip(m.lb, m.ub)), method="highs")
    if ref.status == 2:
        assert sol.status == INFEASIBLE
        return
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(ref.fun, abs=1e-7)
    act = A @ sol.x
    for i, s in enumerate(m.sense):
        viol = act[i] - m.rhs[i] if s == LE else (m.rhs[i] - act[i] if s == GE else abs(act[i] - m.rhs[i]))
        assert viol <= 1e-7
    assert np.all(sol.x >= m.lb - 1e-9) and np.all(sol.x <= m.ub + 1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-5, -1).map(float), min_size=2, max_size=8))
def test_negative_costs_stay_bounded(c):
    sol = solve_milp(model(c, [([1.0] * len(c), LE, 1.0)], integer=True))
    assert sol.status == OPTIMAL and sol.objective == min(c)
