"""Flow network, MILP compilation and layout extraction.

Every placement vertex is split into an in-copy and an out-copy joined by an
auxiliary arc that carries the hardware cost. Belt-to-belt transfers only
happen through junction gadgets attached at grid points. Each box is one
commodity of unit flow from the input to its output.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import ARM, BELT, DIRECTION_NAMES, CostTable, Point, Scene, dist
from .milp import EQ, LE, MilpModel, MilpSolution, ModelBuilder
from .reach import INPUT, OUTPUT, ReachGraph, belt_endpoints

REACH, AUX, INLINE, PORT_IN, PORT_OUT, JUNCTION = (
    "reach", "aux", "inline", "port_in", "port_out", "junction")
MULTIWAY, TURNING = "multiway", "turning"
COSTED = (AUX, INLINE, JUNCTION)


class LayoutError(RuntimeError):
    pass


@dataclass
class Element:
    """A physical thing that can be installed: arm, belt segment or junction."""

    label: str
    kind: str  # arm | belt | multiway | turning | inline
    point: Point
    type: str | None = None
    end: Point | None = None
    direction: int | None = None
    payload: float = np.inf

    @property
    def is_robot(self) -> bool:
        return self.kind in (ARM, BELT)


@dataclass
class NetArc:
    id: int
    tail: int
    head: int
    kind: str
    weight: float = 0.0
    coor: Point | None = None
    payload: float = np.inf
    element: int | None = None  # index into FlowNetwork.elements


@dataclass
class FlowNetwork:
    n_outputs: int
    node_element: list[int | None]  # node -> element index (None for io)
    node_label: list[str]
    arcs: list[NetArc]
    elements: list[Element]
    in_node: dict[int, int]  # reach vertex id -> in-copy
    out_node: dict[int, int]
    junction_rows: list[tuple[str, list[tuple[int, float]], str, float]] = field(default_factory=list)
    station_points: dict[Point, list[int]] = field(default_factory=dict)  # point -> costed arcs
    belt_arcs: list[int] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return len(self.node_label)

    def add_node(self, label: str, element: int | None) -> int:
        self.node_label.append(label)
        self.node_element.append(element)
        return len(self.node_label) - 1

    def add_arc(self, tail, head, kind, **kw) -> int:
        a = NetArc(len(self.arcs), tail, head, kind, **kw)
        self.arcs.append(a)
        return a.id

    def aux_arcs(self) -> list[NetArc]:
        return [a for a in self.arcs if a.kind == AUX]

    def costed_arcs(self) -> list[NetArc]:
        return [a for a in self.arcs if a.kind in COSTED]


def _label_point(p: Point) -> str:
    return f"{p[0]:g},{p[1]:g}"


def split_vertices(graph: ReachGraph, scene: Scene, costs: CostTable | None = None) -> FlowNetwork:
    """Replace each placement with in/out copies joined by a costed auxiliary arc."""
    costs = costs or scene.costs
    catalog = {t.id: t for t in scene.catalog}
    net = FlowNetwork(graph.n_outputs, [], [], [], [], {}, {})
    for v in graph.vertices:
        if v.is_io:
            net.add_node(v.label, None)
    for v in graph.vertices:
        if not v.is_placement:
            continue
        robot = catalog[v.robot]
        el = Element(v.label, v.kind, v.point, v.robot, v.end, v.direction, robot.payload)
        net.elements.append(el)
        e = len(net.elements) - 1
        net.in_node[v.id] = net.add_node(v.label + ":in", e)
        net.out_node[v.id] = net.add_node(v.label + ":out", e)
        w = robot.cost if v.kind == ARM else costs.belt_cost(v.length)
        a = net.add_arc(net.in_node[v.id], net.out_node[v.id], AUX, weight=w, coor=v.point,
                        payload=robot.payload, element=e)
        if v.kind == ARM:
            net.station_points.setdefault(v.point, []).append(a)
        else:
            net.belt_arcs.append(a)
    for u, v in graph.arcs:
        tail = net.out_node.get(u, u)
        head = net.in_node.get(v, v)
        net.add_arc(tail, head, REACH)
    return net


def add_junction_gadgets(net: FlowNetwork, graph: ReachGraph, costs: CostTable) -> FlowNetwork:
    """Attach inline arcs plus one multi-way and one turning gadget per belt grid point."""
    ending, starting = belt_endpoints(graph)
    belt_payload = {}
    for a in net.aux_arcs():
        el = net.elements[a.element]
        if el.kind == BELT:
            belt_payload[a.element] = a.payload
    aux_of = {a.element: a.id for a in net.aux_arcs()}
    vid_element = {vid: net.node_element[node] for vid, node in net.in_node.items()}
    points = sorted(set(ending) | set(starting), key=lambda p: (p[1], p[0]))
    inline_out: dict[int, list[int]] = {}
    inline_in: dict[int, list[int]] = {}
    for q in points:
        inc = sorted(ending.get(q, []))
        out = sorted(starting.get(q, []))
        if not inc or not out:
            continue
        payload = min(belt_payload[vid_element[r]] for r in inc + out)
        for r_in in inc:
            for r_out in out:
                if graph.vertices[r_in].direction != graph.vertices[r_out].direction:
                    continue
                label = f"J:inline@{_label_point(q)}>{DIRECTION_NAMES[graph.vertices[r_in].direction]}"
                net.elements.append(Element(label, "inline", q, payload=payload))
                e = len(net.elements) - 1
                a = net.add_arc(net.out_node[r_in], net.in_node[r_out], INLINE,
                                weight=-costs.motor, coor=q, payload=payload, element=e)
                for parent in (r_in, r_out):
                    net.junction_rows.append(
                        (f"junc_inl{a}_{parent}", [(a, 1.0), (aux_of[vid_element[parent]], -1.0)],
                         LE, 0.0))
                inline_out.setdefault(r_in, []).append(a)
                inline_in.setdefault(r_out, []).append(a)
        for kind, weight in ((MULTIWAY, costs.multiway), (TURNING, costs.turning)):
            label = f"J:{kind}@{_label_point(q)}"
            net.elements.append(Element(label, kind, q, payload=payload))
            e = len(net.elements) - 1
            vp = net.add_node(label + ":+", e)
            vm = net.add_node(label + ":-", e)
            star = net.add_arc(vp, vm, JUNCTION, weight=weight, coor=q, payload=payload, element=e)
            net.station_points.setdefault(q, []).append(star)
            ports_in = [net.add_arc(net.out_node[r], vp, PORT_IN, coor=q, element=e) for r in inc]
            ports_out = [net.add_arc(vm, net.in_node[r], PORT_OUT, coor=q, element=e) for r in out]
            for p in ports_in + ports_out:
                net.junction_rows.append((f"junc_port{p}", [(p, 1.0), (star, -1.0)], LE, 0.0))
            if kind == TURNING:
                net.junction_rows.append(
                    (f"junc_turnin{star}", [(p, 1.0) for p in ports_in] + [(star, -1.0)], EQ, 0.0))
                net.junction_rows.append(
                    (f"junc_turnout{star}", [(p, 1.0) for p in ports_out] + [(star, -1.0)], EQ, 0.0))
    for r, arcs in sorted(inline_out.items()):
        if len(arcs) > 1:
            net.junction_rows.append((f"junc_inlout{r}", [(a, 1.0) for a in arcs], LE, 1.0))
    for r, arcs in sorted(inline_in.items()):
        if len(arcs) > 1:
            net.junction_rows.append((f"junc_inlin{r}", [(a, 1.0) for a in arcs], LE, 1.0))
    return net


def build_network(graph: ReachGraph, scene: Scene, costs: CostTable | None = None) -> FlowNetwork:
    costs = costs or scene.costs
    return add_junction_gadgets(split_vertices(graph, scene, costs), graph, costs)


# --- MILP ----------------------------------------------------------------------

def s_var(arc: int) -> int:
    return arc


def f_var(net: FlowNetwork, arc: int, box: int) -> int:
    n = len(net.arcs)
    return n + box * n + arc


def compile_milp(net: FlowNetwork, scene: Scene) -> MilpModel:
    """Selection binaries s_a, per-box flows f_{a,i}, and every constraint family."""
    N = scene.n_outputs
    nA = len(net.arcs)
    b = ModelBuilder()
    for a in net.arcs:
        b.add_var(f"s_{a.id}", a.weight, 0.0, 1.0, integer=True)
    for i in range(N):
        for a in net.arcs:
            b.add_var(f"f_{a.id}_{i}", 0.0, 0.0, 1.0)
    # occupancy: one station (arm or junction) per grid point; belts keep clear of arms
    for p, arcs in sorted(net.station_points.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        b.add_row(f"occ_{_label_point(p)}", [(a, 1.0) for a in sorted(arcs)], LE, 1.0)
    arm_arcs_at = {p: [a for a in arcs if net.arcs[a].kind == AUX]
                   for p, arcs in net.station_points.items()}
    seg_index = {}
    for a in net.belt_arcs:
        el = net.elements[net.arcs[a].element]
        seg_index[(el.point, el.end)] = a
        for k, p in enumerate((el.point, el.end)):
            arms = arm_arcs_at.get(p, [])
            if arms:
                b.add_row(f"occ_belt{a}_{k}", [(a, 1.0)] + [(x, 1.0) for x in arms], LE, 1.0)
    for (p, q), a in sorted(seg_index.items(), key=lambda kv: kv[1]):
        rev = seg_index.get((q, p))
        if rev is not None and a < rev:
            b.add_row(f"occ_pair{a}_{rev}", [(a, 1.0), (rev, 1.0)], LE, 1.0)
    # capacity
    for i in range(N):
        for a in range(nA):
            b.add_row(f"cap_{a}_{i}", [(f_var(net, a, i), 1.0), (a, -1.0)], LE, 0.0)
    # conservation: inflow - outflow = -1 at input, +1 at own output, 0 elsewhere
    incoming: list[list[int]] = [[] for _ in range(net.n_nodes)]
    outgoing: list[list[int]] = [[] for _ in range(net.n_nodes)]
    for a in net.arcs:
        outgoing[a.tail].append(a.id)
        incoming[a.head].append(a.id)
    for i in range(N):
        for v in range(net.n_nodes):
            rhs = -1.0 if v == 0 else (1.0 if v == 1 + i else 0.0)
            terms = [(f_var(net, a, i), 1.0) for a in incoming[v]]
            terms += [(f_var(net, a, i), -1.0) for a in outgoing[v]]
            b.add_row(f"cons_{v}_{i}", terms, EQ, rhs)
    # payload
    for i, out in enumerate(scene.outputs):
        for a in net.arcs:
            if a.kind in COSTED and a.payload < out.weight:
                b.add_row(f"pay_{a.id}_{i}", [(f_var(net, a.id, i), 1.0)], EQ, 0.0)
    for name, terms, sense, rhs in net.junction_rows:
        b.add_row(name, terms, sense, rhs)
    return b.build(meta={"n_arcs": nA, "n_boxes": N})


def flows(net: FlowNetwork, x: np.ndarray, box: int) -> np.ndarray:
    nA = len(net.arcs)
    return np.asarray(x)[nA + box * nA: nA + (box + 1) * nA]


# --- extraction ------------------------------------------------------------------

@dataclass
class Layout:
    elements: dict[str, Element]  # selected, keyed by label
    paths: list[list[str]]
    total_cost: float

    @property
    def robots(self) -> list[Element]:
        return [e for e in self.elements.values() if e.kind == ARM]

    @property
    def belts(self) -> list[Element]:
        return [e for e in self.elements.values() if e.kind == BELT]

    @property
    def junctions(self) -> list[Element]:
        return [e for e in self.elements.values() if e.kind in (MULTIWAY, TURNING, "inline")]

    def count(self, kind: str) -> int:
        return sum(1 for e in self.elements.values() if e.kind == kind)

    def to_dict(self) -> dict:
        return {
            "robots": [{"type": e.type, "x": e.point[0], "y": e.point[1]} for e in self.robots],
            "belts": [{"from": list(e.point), "to": list(e.end), "dir": DIRECTION_NAMES[e.direction]}
                      for e in self.belts],
            "junctions": [{"kind": e.kind, "x": e.point[0], "y": e.point[1]}
                          | ({"dir": e.label.rsplit(">", 1)[1]} if e.kind == "inline" else {})
                          for e in self.junctions],
            "paths": [list(p) for p in self.paths],
            "total_cost": self.total_cost,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def layout_from_dict(doc: dict, scene: Scene) -> Layout:
    """Rebuild a :class:`Layout` from its document form."""
    catalog = {t.id: t for t in scene.catalog}
    belt = scene.belt_type()
    elements: dict[str, Element] = {}
    for r in doc.get("robots", []):
        p = (float(r["x"]), float(r["y"]))
        label = f"{r['type']}@{_label_point(p)}"
        elements[label] = Element(label, ARM, p, r["type"], payload=catalog[r["type"]].payload)
    for s in doc.get("belts", []):
        p, q = tuple(map(float, s["from"])), tuple(map(float, s["to"]))
        k = DIRECTION_NAMES.index(s["dir"])
        label = f"belt@{_label_point(p)}>{s['dir']}"
        payload = belt.payload if belt else np.inf
        elements[label] = Element(label, BELT, p, belt.id if belt else "belt", q, k, payload)
    for j in doc.get("junctions", []):
        p = (float(j["x"]), float(j["y"]))
        label = f"J:{j['kind']}@{_label_point(p)}" + (f">{j['dir']}" if j["kind"] == "inline" else "")
        elements[label] = Element(label, j["kind"], p)
    return Layout(elements, [list(p) for p in doc.get("paths", [])], float(doc["total_cost"]))


def _lexmin_shortest_path(n_nodes, adj, src, dst):
    """Fewest hops; among those the lexicographically smallest node sequence."""
    radj: list[list[int]] = [[] for _ in range(n_nodes)]
    for u in range(n_nodes):
        for v in adj[u]:
            radj[v].append(u)
    to_dst = [-1] * n_nodes
    to_dst[dst] = 0
    dq = deque([dst])
    while dq:
        v = dq.popleft()
        for u in radj[v]:
            if to_dst[u] < 0:
                to_dst[u] = to_dst[v] + 1
                dq.append(u)
    if to_dst[src] < 0:
        return None
    path = [src]
    while path[-1] != dst:
        u = path[-1]
        path.append(min(v for v in adj[u] if to_dst[v] == to_dst[u] - 1))
    return path


def extract_layout(net: FlowNetwork, solution: MilpSolution | np.ndarray, scene: Scene) -> Layout:
    x = solution.x if isinstance(solution, MilpSolution) else np.asarray(solution)
    if x is None:
        raise LayoutError("no solution to extract")
    s = np.round(x[: len(net.arcs)]).astype(int)
    chosen = {a.element for a in net.arcs if a.kind in COSTED and s[a.id] == 1}
    total = float(sum(a.weight for a in net.arcs if a.kind in COSTED and s[a.id] == 1))
    paths = []
    for i, out in enumerate(scene.outputs):
        adj: list[list[int]] = [[] for _ in range(net.n_nodes)]
        for a in net.arcs:
            et, eh = net.node_element[a.tail], net.node_element[a.head]
            if a.kind == REACH:
                usable = (et is None or et in chosen) and (eh is None or eh in chosen)
                if eh is None and a.head != 1 + i:
                    usable = False
            elif a.kind in (PORT_IN, PORT_OUT):
                usable = s[a.id] == 1 and a.element in chosen
            else:
                usable = s[a.id] == 1
            if usable and a.kind in COSTED and a.payload < out.weight:
                usable = False
            if usable:
                adj[a.tail].append(a.head)
        for lst in adj:
            lst.sort()
        nodes = _lexmin_shortest_path(net.n_nodes, adj, 0, 1 + i)
        if nodes is None:
            raise LayoutError(f"disconnected output {i + 1}")
        labels: list[str] = []
        for v in nodes:
            e = net.node_element[v]
            lab = net.node_label[v] if e is None else net.elements[e].label
            if not labels or labels[-1] != lab:
                labels.append(lab)
        paths.append(labels)
    elements = {net.elements[e].label: net.elements[e] for e in sorted(chosen)}
    return Layout(elements, paths, total)


def element_cost(el: Element, scene: Scene) -> float:
    """Hardware cost of a single element, recomputed from the catalog and cost table."""
    c = scene.costs
    if el.kind == ARM:
        return scene.robot(el.type).cost
    if el.kind == BELT:
        return c.belt_cost(dist(el.point, el.end))
    return {"inline": -c.motor, MULTIWAY: c.multiway, TURNING: c.turning}[el.kind]


def is_io_label(label: str) -> bool:
    return label == "in" or label.startswith("out")


__all__ = [
    "AUX", "COSTED", "INLINE", "JUNCTION", "MULTIWAY", "PORT_IN", "PORT_OUT", "REACH",
    "TURNING", "Element", "FlowNetwork", "Layout", "LayoutError", "NetArc", "add_junction_gadgets",
    "build_network", "compile_milp", "element_cost", "extract_layout", "f_var", "flows",
    "is_io_label", "layout_from_dict", "s_var", "split_vertices", "INPUT", "OUTPUT",
]
