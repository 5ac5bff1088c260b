import dataclasses

from hypothesis import given, settings
from hypothesis import strategies as st

from robolayout.core import ARM, UR5E
from robolayout.reach import Vertex, build_reachability_graph, can_hand_over

from conftest import make_scene

CATALOG = {"UR5e": UR5E}


def arm(i, x, y=0.0, robot="UR5e"):
    return Vertex(i, ARM, (x, y), robot=robot)


def test_handover_examples():
    assert can_hand_over(arm(1, 0), arm(2, 1.0), CATALOG)
    assert not can_hand_over(arm(1, 0), arm(2, 0.2), CATALOG)  # base collision
    assert not can_hand_over(arm(1, 0), arm(2, 3.0), CATALOG)  # out of reach


def test_handover_io_and_belts():
    inp = Vertex(0, "input", (0.0, 0.0))
    out = Vertex(1, "output", (2.0, 0.0), output=0)
    belt = Vertex(3, "belt", (0.5, 0.0), robot="belt", direction=0, end=(1.0, 0.0))
    assert can_hand_over(inp, arm(2, 0.5), CATALOG)
    assert not can_hand_over(inp, arm(2, 0.1), CATALOG)  # port inside the inner radius
    assert not can_hand_over(inp, out, CATALOG)
    assert not can_hand_over(inp, belt, CATALOG)
    assert can_hand_over(arm(2, 0.75, 0.5), belt, CATALOG)
    assert not can_hand_over(arm(2, 0.75, 0.05), belt, CATALOG)  # base sits on the belt


def test_single_point_chain_graph():
    # floor holds exactly one grid point, 0.5 m from input and from the output
    scene = make_scene(((0.5, 0), (1, 0)), 1.0, (0, 0), [(1, 0)])
    g = build_reachability_graph(scene)
    assert len(g.vertices) == 3
    assert g.arcs == [(0, 2), (2, 1)]


def test_no_placements():
    scene = make_scene(((0.5, 0), (1, 0)), 1.0, (0, 0), [(1, 0)], catalog=["belt"])
    g = build_reachability_graph(scene)
    assert [v.kind for v in g.vertices] == ["input", "output"]
    assert g.arcs == []
    assert any("isolated" in w for w in g.warnings)


def test_vertex_counts_two_arm_types():
    scene = make_scene(((0, 0), (1, 1)), 0.5, (0, 0), [(1, 1)], catalog=["UR5e", "IRB4600"])
    g = build_reachability_graph(scene)
    assert sum(v.kind == ARM for v in g.vertices) == 18
    assert sum(v.is_io for v in g.vertices) == 2


def test_belt_segments_stay_on_grid():
    scene = make_scene(((0, 0), (1, 1)), 0.5, (0, 0), [(1, 1)], catalog=["UR5e", "belt"])
    g = build_reachability_graph(scene)
    belts = [v for v in g.vertices if v.kind == "belt"]
    # 3x3 lattice: 12 axis edges + 8 diagonals, both directions each
    assert len(belts) == 2 * (12 + 8)
    assert all(not (v.kind == "belt" and w.kind == "belt")
               for a, b in g.arcs for v, w in [(g.vertices[a], g.vertices[b])])


def test_custom_predicate_matches_default():
    scene = make_scene(((0, 0), (2, 1)), 0.5, (0, 0), [(2, 1)], catalog=["UR5e", "belt"])
    assert build_reachability_graph(scene).arcs == \
        build_reachability_graph(scene, predicate=can_hand_over).arcs


small = st.floats(0.5, 3.0).map(lambda v: round(v, 2))


@st.composite
def grids(draw):
    w, h = draw(small), draw(small)
    spacing = draw(st.sampled_from([0.5, 0.75, 1.0]))
    return make_scene(((0, 0), (w, h)), spacing, (0, 0), [(w, h)], catalog=["UR5e", "IRB4600"])


@settings(max_examples=25, deadline=None)
@given(grids())
def test_arm_arcs_symmetric_and_deterministic(scene):
    g = build_reachability_graph(scene)
    arcs = g.arc_set()
    for u, v in arcs:
        assert u != v
        if g.vertices[u].kind == ARM and g.vertices[v].kind == ARM:
            assert (v, u) in arcs
    assert build_reachability_graph(scene).arcs == g.arcs


@settings(max_examples=25, deadline=None)
@given(grids(), st.floats(0.0, 0.5), st.floats(0.0, 0.1))
def test_reach_and_clearance_monotone(scene, more_reach, more_clear):
    g = build_reachability_graph(scene)
    t = scene.catalog[0]
    farther = scene.with_catalog([dataclasses.replace(t, reach_max=t.reach_max + more_reach),
                                  *scene.catalog[1:]])
    fatter = scene.with_catalog([dataclasses.replace(t, clearance=t.clearance + more_clear),
                                 *scene.catalog[1:]])
    assert g.arc_set() <= build_reachability_graph(farther).arc_set()
    assert build_reachability_graph(fatter).arc_set() <= g.arc_set()
