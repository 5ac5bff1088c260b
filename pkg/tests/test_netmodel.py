import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robolayout.core import ARM, BELT
from robolayout.milp import solve_milp
from robolayout.netmodel import (AUX, INLINE, JUNCTION, MULTIWAY, PORT_IN, PORT_OUT, TURNING,
                                 LayoutError, add_junction_gadgets, build_network, compile_milp,
                                 element_cost, extract_layout, flows, layout_from_dict,
                                 split_vertices)
from robolayout.oracle import verify_solution
from robolayout.pipeline import optimize
from robolayout.reach import build_reachability_graph

from conftest import make_scene, random_small_scene


def single_point_scene(**kw):
    return make_scene(((0.5, 0), (1, 0)), 1.0, (0, 0), [(1, 0)], **kw)


def test_split_single_robot():
    scene = single_point_scene()
    net = split_vertices(build_reachability_graph(scene), scene)
    assert net.n_nodes == 4
    assert len(net.arcs) == 3
    aux = net.aux_arcs()
    assert len(aux) == 1 and aux[0].weight == 1.0 and aux[0].coor == (0.5, 0.0)


def test_split_belt_weight():
    scene = make_scene(((0, 0), (0.5, 0)), 0.5, (0, 0), [(0.5, 0)], catalog=["UR5e", "belt"])
    net = split_vertices(build_reachability_graph(scene), scene)
    belts = [a for a in net.aux_arcs() if net.elements[a.element].kind == BELT]
    assert len(belts) == 2
    assert all(a.weight == pytest.approx(0.2) for a in belts)


def test_split_without_placements():
    scene = single_point_scene(catalog=["belt"])
    net = split_vertices(build_reachability_graph(scene), scene)
    assert net.node_label == ["in", "out1"]
    assert net.aux_arcs() == []


def line_network():
    scene = make_scene(((0, 0), (1, 0)), 0.5, (0, 0), [(1, 0)], catalog=["belt"])
    graph = build_reachability_graph(scene)
    return scene, graph, add_junction_gadgets(split_vertices(graph, scene), graph, scene.costs)


def test_inline_arc_for_collinear_pair():
    _, _, net = line_network()
    east = [a for a in net.arcs if a.kind == INLINE and net.elements[a.element].label.endswith(">E")]
    assert len(east) == 1
    assert east[0].weight == pytest.approx(-0.1)
    assert east[0].coor == (0.5, 0.0)
    # coupled to both parents
    rows = [r for r in net.junction_rows if r[0].startswith(f"junc_inl{east[0].id}_")]
    assert len(rows) == 2


def test_gadget_at_eight_way_point():
    scene = make_scene(((0, 0), (1, 1)), 0.5, (0, 0), [(1, 1)], catalog=["belt"])
    graph = build_reachability_graph(scene)
    net = build_network(graph, scene)
    centre = (0.5, 0.5)
    for kind in (MULTIWAY, TURNING):
        e = next(k for k, el in enumerate(net.elements) if el.kind == kind and el.point == centre)
        ports = [a for a in net.arcs if a.element == e]
        assert sum(a.kind == PORT_IN for a in ports) == 8
        assert sum(a.kind == PORT_OUT for a in ports) == 8
        assert sum(a.kind == JUNCTION for a in ports) == 1


def test_no_gadgets_without_belts():
    scene = make_scene(((0, 0), (1, 1)), 0.5, (0, 0), [(1, 1)])
    net = build_network(build_reachability_graph(scene), scene)
    assert not any(a.kind in (INLINE, JUNCTION, PORT_IN, PORT_OUT) for a in net.arcs)
    assert net.junction_rows == []


def test_chain_flow_model():
    scene = single_point_scene()
    net = build_network(build_reachability_graph(scene), scene)
    model = compile_milp(net, scene)
    assert model.meta == {"n_arcs": 3, "n_boxes": 1}
    assert model.n_vars == 3 + 3
    sol = solve_milp(model)
    assert sol.objective == 1.0
    assert flows(net, sol.x, 0).tolist() == [1.0, 1.0, 1.0]


def test_payload_fixings():
    scene = make_scene(((0.5, 0), (1, 0)), 1.0, (0, 0), [{"pos": [1, 0], "weight": 10}])
    net = build_network(build_reachability_graph(scene), scene)
    model = compile_milp(net, scene)
    pay = [r for r in model.row_names if r.startswith("pay_")]
    assert pay == [f"pay_{a.id}_0" for a in net.aux_arcs()]
    assert solve_milp(model).status == "infeasible"


def test_occupancy_row_two_arm_types():
    scene = single_point_scene(catalog=["UR5e", "IRB4600"])
    net = build_network(build_reachability_graph(scene), scene)
    model = compile_milp(net, scene)
    i = model.row_names.index("occ_0.5,0")
    assert model.A[i].nnz == 2 and model.rhs[i] == 1.0 and model.sense[i] == "<="


def test_extract_chain(chain_scene):
    res = optimize(chain_scene)
    assert res.layout.paths == [["in", "UR5e@0.5,0", "out1"]]
    assert res.layout.total_cost == 1.0


def test_extract_tie_break_lexicographic():
    scene = make_scene(((0, -0.5), (1, 0.5)), 0.5, (0, 0), [(1, 0)])
    graph = build_reachability_graph(scene)
    net = build_network(graph, scene)
    x = np.zeros(compile_milp(net, scene).n_vars)
    for a in net.aux_arcs():
        if net.elements[a.element].label in ("UR5e@0.5,-0.5", "UR5e@0.5,0.5"):
            x[a.id] = 1
    layout = extract_layout(net, x, scene)
    assert layout.paths == [["in", "UR5e@0.5,-0.5", "out1"]]
    assert layout.total_cost == 2.0


def test_extract_disconnected():
    scene = single_point_scene()
    net = build_network(build_reachability_graph(scene), scene)
    with pytest.raises(LayoutError, match="disconnected output 1"):
        extract_layout(net, np.zeros(6), scene)


def test_inline_merge_cost():
    _, _, net = line_network()
    by_label = {net.elements[a.element].label: a for a in net.arcs if a.element is not None
                and a.kind in (AUX, INLINE)}
    picked = [by_label["belt@0,0>E"], by_label["belt@0.5,0>E"], by_label["J:inline@0.5,0>E"]]
    assert math.fsum(a.weight for a in picked) == pytest.approx(0.3, abs=1e-12)


def test_layout_document_round_trip(belt_scene):
    layout = optimize(belt_scene).layout
    again = layout_from_dict(layout.to_dict(), belt_scene)
    assert again.to_dict() == layout.to_dict()
    assert set(again.elements) == set(layout.elements)


def solved(seed, **kw):
    scene = random_small_scene(np.random.default_rng(seed), **kw)
    return scene, optimize(scene)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_solution_invariants(seed, belts):
    scene, res = solved(seed, belts=belts)
    if res.layout is None:
        return
    assert verify_solution(res.model, res.solution.x).ok(1e-9)
    layout = res.layout
    assert math.fsum(element_cost(e, scene) for e in layout.elements.values()) == \
        pytest.approx(layout.total_cost, abs=1e-9)
    stations: dict = {}
    for e in layout.elements.values():
        if e.kind in (ARM, MULTIWAY, TURNING):
            stations[e.point] = stations.get(e.point, 0) + 1
    assert all(c == 1 for c in stations.values())
    arm_points = {e.point for e in layout.robots}
    assert all(b.point not in arm_points and b.end not in arm_points for b in layout.belts)
    for i, path in enumerate(layout.paths):
        assert path[0] == "in" and path[-1] == f"out{i + 1}"
        assert all(v in layout.elements for v in path[1:-1])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_payload_relaxation_monotone(seed):
    scene, res = solved(seed, heavy=True)
    light = dataclasses.replace(
        scene, outputs=tuple(dataclasses.replace(o, weight=0.0) for o in scene.outputs))
    assert optimize(light).solution.objective <= res.solution.objective + 1e-9


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.5, 2.0, 3.0]))
def test_cost_scaling(seed, lam):
    scene, res = solved(seed, belts=True)
    scaled = scene.with_costs(scene.costs.scaled(lam)).with_catalog(
        [dataclasses.replace(t, cost=lam * t.cost) for t in scene.catalog])
    res2 = optimize(scaled)
    if res.layout is None:
        assert res2.layout is None
        return
    assert res2.solution.objective == pytest.approx(lam * res.solution.objective, abs=1e-9)
    # the scaled optimum is optimal at the original prices as well
    back = math.fsum(element_cost(e, scene) for e in res2.layout.elements.values())
    assert back == pytest.approx(res.solution.objective, abs=1e-9)
