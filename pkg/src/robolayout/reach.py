"""Kinematic reachability graph over io ports and every candidate placement.

Reachability uses a planar surrogate: an arm reaches the closed annulus
``[reach_min, reach_max]`` around its base and its base is a disc of radius
``clearance``. Belts are centerline segments between adjacent grid points.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .core import ARM, BELT, DIRECTION_NAMES, DIRECTIONS, Point, RobotType, Scene, dist, grid_points

log = logging.getLogger(__name__)

INPUT, OUTPUT = "input", "output"
_EPS = 1e-12


@dataclass(frozen=True)
class Vertex:
    id: int
    kind: str  # input | output | arm | belt
    point: Point
    robot: str | None = None
    direction: int | None = None  # belts: index into DIRECTIONS
    end: Point | None = None  # belts: far end of the segment
    output: int | None = None  # outputs: box index

    @property
    def is_io(self) -> bool:
        return self.kind in (INPUT, OUTPUT)

    @property
    def is_placement(self) -> bool:
        return self.kind in (ARM, BELT)

    @property
    def length(self) -> float:
        return dist(self.point, self.end) if self.kind == BELT else 0.0

    @property
    def label(self) -> str:
        x, y = (_fmt(v) for v in self.point)
        if self.kind == INPUT:
            return "in"
        if self.kind == OUTPUT:
            return f"out{self.output + 1}"
        if self.kind == ARM:
            return f"{self.robot}@{x},{y}"
        return f"belt@{x},{y}>{DIRECTION_NAMES[self.direction]}"


def _fmt(v: float) -> str:
    return f"{v:g}"


@dataclass
class ReachGraph:
    vertices: list[Vertex]
    arcs: list[tuple[int, int]]
    n_outputs: int
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.vertices)
        self.out_adj: list[list[int]] = [[] for _ in range(n)]
        self.in_adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in self.arcs:
            self.out_adj[u].append(v)
            self.in_adj[v].append(u)

    @property
    def input(self) -> int:
        return 0

    def output(self, i: int) -> int:
        return 1 + i

    def placements(self) -> list[Vertex]:
        return [v for v in self.vertices if v.is_placement]

    def arc_set(self) -> set[tuple[int, int]]:
        return set(self.arcs)

    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": v.id, "kind": v.kind, "label": v.label, "point": list(v.point)}
                         for v in self.vertices],
            "arcs": [list(a) for a in self.arcs],
        }


# --- predicate ---------------------------------------------------------------

def _segment_distance_range(c: Point, a: Point, b: Point) -> tuple[float, float]:
    ax, ay = b[0] - a[0], b[1] - a[1]
    t = ((c[0] - a[0]) * ax + (c[1] - a[1]) * ay) / (ax * ax + ay * ay)
    t = min(1.0, max(0.0, t))
    closest = (a[0] + t * ax, a[1] + t * ay)
    return dist(c, closest), max(dist(c, a), dist(c, b))


def can_hand_over(a: Vertex, b: Vertex, catalog: dict[str, RobotType] | Scene) -> bool:
    """Whether a box can pass directly between ``a`` and ``b`` (symmetric for geometry)."""
    if a.id == b.id and a.kind == b.kind:
        raise ValueError("a handover needs two distinct entities")
    if isinstance(catalog, Scene):
        catalog = {t.id: t for t in catalog.catalog}
    if a.kind != ARM and b.kind != ARM:
        return False  # io-io, io-belt and belt-belt never hand over directly
    if a.kind != ARM:
        a, b = b, a
    arm = catalog[a.robot]
    if b.kind == ARM:
        other = catalog[b.robot]
        d = dist(a.point, b.point)
        return (d >= arm.clearance + other.clearance - _EPS
                and d <= arm.reach_max + other.reach_max + _EPS
                and d >= arm.reach_min - other.reach_max - _EPS
                and d >= other.reach_min - arm.reach_max - _EPS)
    if b.kind == BELT:
        dmin, dmax = _segment_distance_range(a.point, b.point, b.end)
        return (dmin >= arm.clearance - _EPS and dmin <= arm.reach_max + _EPS
                and dmax >= arm.reach_min - _EPS)
    d = dist(a.point, b.point)
    return d >= arm.clearance - _EPS and arm.reach_min - _EPS <= d <= arm.reach_max + _EPS


# --- construction ------------------------------------------------------------

def candidate_vertices(scene: Scene) -> list[Vertex]:
    verts = [Vertex(0, INPUT, scene.input)]
    for i, out in enumerate(scene.outputs):
        verts.append(Vertex(1 + i, OUTPUT, out.pos, output=i))
    pts = grid_points(scene)
    arms = scene.arm_types()
    for p in pts:
        for t in arms:
            verts.append(Vertex(len(verts), ARM, p, robot=t.id))
    belt = scene.belt_type()
    if belt is not None:
        on_grid = set(pts)
        s = scene.spacing
        for p in pts:
            for k, (dx, dy) in enumerate(DIRECTIONS):
                q = (round(p[0] + dx * s, 12), round(p[1] + dy * s, 12))
                if q in on_grid:
                    verts.append(Vertex(len(verts), BELT, p, robot=belt.id, direction=k, end=q))
    return verts


def build_reachability_graph(scene: Scene,
                             predicate: Callable[[Vertex, Vertex, dict], bool] | None = None
                             ) -> ReachGraph:
    """All directed handover arcs between io ports and placements.

    ``predicate`` replaces the built-in geometric check (e.g. with an IK-based
    one); the vectorized kernels are only used for the default predicate.
    """
    verts = candidate_vertices(scene)
    catalog = {t.id: t for t in scene.catalog}
    arms = [v for v in verts if v.kind == ARM]
    belts = [v for v in verts if v.kind == BELT]
    arcs: list[tuple[int, int]] = []

    if predicate is None:
        ok = lambda a, b: can_hand_over(a, b, catalog)  # noqa: E731
        if arms:
            xy = np.array([v.point for v in arms], dtype=float)
            rmin = np.array([catalog[v.robot].reach_min for v in arms])
            rmax = np.array([catalog[v.robot].reach_max for v in arms])
            clr = np.array([catalog[v.robot].clearance for v in arms])
            ids = np.array([v.id for v in arms])
            mask = kernels.arm_pair_mask(xy, rmin, rmax, clr)
            ii, jj = np.nonzero(mask)
            arcs += list(zip(ids[ii].tolist(), ids[jj].tolist()))
            if belts:
                sa = np.array([v.point for v in belts], dtype=float)
                sb = np.array([v.end for v in belts], dtype=float)
                bids = np.array([v.id for v in belts])
                bm = kernels.arm_segment_mask(xy, rmin, rmax, clr, sa, sb)
                ii, jj = np.nonzero(bm)
                arcs += list(zip(ids[ii].tolist(), bids[jj].tolist()))
                arcs += list(zip(bids[jj].tolist(), ids[ii].tolist()))
    else:
        ok = lambda a, b: predicate(a, b, catalog)  # noqa: E731
        for a in arms:
            for b in arms + belts:
                if a.id != b.id and ok(a, b):
                    arcs.append((a.id, b.id))
                    if b.kind == BELT:
                        arcs.append((b.id, a.id))

    for a in arms:
        if ok(verts[0], a):
            arcs.append((0, a.id))
        for i in range(scene.n_outputs):
            if ok(a, verts[1 + i]):
                arcs.append((a.id, 1 + i))
    arcs = sorted(set(arcs))
    graph = ReachGraph(verts, arcs, scene.n_outputs)
    if not graph.out_adj[0]:
        msg = "input isolated: no placement can pick from the input"
        graph.warnings.append(msg)
        log.warning(msg)
    for i in range(scene.n_outputs):
        if not graph.in_adj[1 + i]:
            msg = f"output {i + 1} isolated: no placement can reach it"
            graph.warnings.append(msg)
            log.warning(msg)
    return graph


def belt_endpoints(graph: ReachGraph) -> tuple[dict[Point, list[int]], dict[Point, list[int]]]:
    """Belt vertex ids grouped by the grid point they end at / start from."""
    ending: dict[Point, list[int]] = {}
    starting: dict[Point, list[int]] = {}
    for v in graph.vertices:
        if v.kind == BELT:
            ending.setdefault(v.end, []).append(v.id)
            starting.setdefault(v.point, []).append(v.id)
    return ending, starting


def max_arm_reach(scene: Scene) -> float:
    return max((t.reach_max for t in scene.arm_types()), default=0.0)
