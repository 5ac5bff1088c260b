"""A* over sets of arm placements (the robot-count baseline).

States are sets of placements that are all reachable from the input through
the set itself. A successor adds one arm placement adjacent to the set (or to
the input). The goal is reached once every output can be served along a
payload-sufficient chain. Belt segments are not searched.
"""
from __future__ import annotations

import heapq
import logging
import math
import time
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .core import ARM, Point, Scene, dist
from .netmodel import Element, Layout
from .reach import ReachGraph

log = logging.getLogger(__name__)

OK, TIMEOUT, OUT_OF_MEMORY, INFEASIBLE = "optimal", "timeout", "out_of_memory", "infeasible"


@dataclass(frozen=True)
class SearchParams:
    time_limit_s: float = 300.0
    max_states: int = 2_000_000  # open + closed entries before giving up


@dataclass
class SearchResult:
    status: str
    layout: Layout | None
    expanded: int
    generated: int
    elapsed_s: float

    @property
    def ok(self) -> bool:
        return self.status == OK

    @property
    def cost(self) -> float:
        return self.layout.total_cost if self.layout else math.inf


def _gap(p: Point, out: Point, l: float, from_input: bool) -> float:
    d = dist(p, out)
    return d if from_input else max(0.0, d - l)


def heuristic(q: Iterable[Point], scene: Scene, l: float, outputs: Iterable[Point] | None = None) -> int:
    """Lower bound on the arms still needed: ceil(max_i min_p D_i(p) / 2l).

    ``q`` holds the base points of the selected arms. D_i(p) is the distance from
    p to output i that an arm at p cannot already cover (``dist - l``); the input
    location, which holds no arm, always counts with its full distance.
    """
    outs = list(outputs) if outputs is not None else [o.pos for o in scene.outputs]
    pts = list(q)
    worst = 0.0
    for o in outs:
        best = dist(scene.input, o)
        for p in pts:
            best = min(best, _gap(p, o, l, False))
        worst = max(worst, best)
    return math.ceil(worst / (2 * l) - 1e-9) if worst > 0 else 0


def astar_layout(scene: Scene, graph: ReachGraph, params: SearchParams | None = None,
                 **overrides) -> SearchResult:
    params = params or SearchParams()
    if overrides:
        params = SearchParams(**{**params.__dict__, **overrides})
    start = time.monotonic()
    catalog = {t.id: t for t in scene.catalog}
    verts = graph.vertices
    arms = [v for v in verts if v.kind == ARM]
    if not arms:
        return SearchResult(INFEASIBLE, None, 0, 0, time.monotonic() - start)
    l = max(catalog[v.robot].reach_max for v in arms)
    unit = min(catalog[v.robot].cost for v in arms)
    outs = [o.pos for o in scene.outputs]
    weights = [o.weight for o in scene.outputs]
    is_arm = {v.id for v in arms}

    # per-output residual distance of each arm placement
    gaps = {v.id: tuple(_gap(v.point, o, l, False) for o in outs) for v in arms}
    root_gap = tuple(dist(scene.input, o) for o in outs)

    def h_of(g: tuple[float, ...]) -> float:
        worst = max(g, default=0.0)
        return unit * (math.ceil(worst / (2 * l) - 1e-9) if worst > 0 else 0)

    def is_goal(q: frozenset[int]) -> bool:
        for i, w in enumerate(weights):
            ok = {v for v in q if catalog[verts[v].robot].payload >= w}
            if not _reaches(graph, ok, graph.output(i)):
                return False
        return True

    # quick infeasibility check: the full arm set must already work
    if not is_goal(frozenset(is_arm)):
        return SearchResult(INFEASIBLE, None, 0, 0, time.monotonic() - start)

    counter = 0
    root = frozenset()
    heap = [(h_of(root_gap), h_of(root_gap), counter, root, 0.0, root_gap)]
    closed: set[frozenset[int]] = set()
    seen: set[frozenset[int]] = {root}
    expanded = 0
    while heap:
        if time.monotonic() - start > params.time_limit_s:
            return SearchResult(TIMEOUT, None, expanded, counter, time.monotonic() - start)
        if len(seen) > params.max_states:
            log.info("A* state cap %d reached", params.max_states)
            return SearchResult(OUT_OF_MEMORY, None, expanded, counter, time.monotonic() - start)
        f, h, _, q, g, gp = heapq.heappop(heap)
        if q in closed:
            continue
        closed.add(q)
        expanded += 1
        if q and h == 0 and is_goal(q):
            layout = _layout(scene, graph, q, catalog, g)
            return SearchResult(OK, layout, expanded, counter, time.monotonic() - start)
        used = {verts[v].point for v in q}
        cand = set(graph.out_adj[graph.input])
        for u in q:
            cand.update(graph.out_adj[u])
        for p in sorted(cand):
            if p not in is_arm or p in q or verts[p].point in used:
                continue
            child = q | {p}
            if child in seen:
                continue
            seen.add(child)
            cg = tuple(min(a, b) for a, b in zip(gp, gaps[p]))
            ch = h_of(cg)
            g2 = g + catalog[verts[p].robot].cost
            counter += 1
            heapq.heappush(heap, (g2 + ch, ch, counter, child, g2, cg))
    return SearchResult(INFEASIBLE, None, expanded, counter, time.monotonic() - start)


def _reaches(graph: ReachGraph, allowed: set[int], target: int) -> bool:
    seen = {graph.input}
    dq = deque([graph.input])
    while dq:
        u = dq.popleft()
        for v in graph.out_adj[u]:
            if v == target:
                return True
            if v in allowed and v not in seen:
                seen.add(v)
                dq.append(v)
    return False


def trace_path(graph: ReachGraph, allowed: set[int], target: int) -> list[int] | None:
    """Fewest-hop input-to-target path through ``allowed``, lexicographically smallest."""
    nodes = allowed | {graph.input, target}
    to_dst = {target: 0}
    dq = deque([target])
    while dq:
        v = dq.popleft()
        for u in graph.in_adj[v]:
            if u in nodes and u not in to_dst and u != target:
                to_dst[u] = to_dst[v] + 1
                dq.append(u)
    if graph.input not in to_dst:
        return None
    path = [graph.input]
    while path[-1] != target:
        u = path[-1]
        path.append(min(v for v in graph.out_adj[u]
                        if v in nodes and to_dst.get(v, -1) == to_dst[u] - 1))
    return path


def _layout(scene, graph, q, catalog, g) -> Layout:
    verts = graph.vertices
    elements = {}
    for v in sorted(q):
        u = verts[v]
        elements[u.label] = Element(u.label, ARM, u.point, u.robot,
                                    payload=catalog[u.robot].payload)
    paths = []
    for i, w in enumerate(o.weight for o in scene.outputs):
        ok = {v for v in q if catalog[verts[v].robot].payload >= w}
        path = trace_path(graph, ok, graph.output(i))
        paths.append([verts[v].label for v in path])
    return Layout(elements, paths, float(g))
