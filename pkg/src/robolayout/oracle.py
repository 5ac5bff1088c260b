"""Solver-independent ground truth.

``brute_force_layout`` enumerates placements directly on the reachability
graph and never touches the flow network or the MILP. ``verify_solution``
recomputes every row of a model from scratch.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ARM, BELT, CostTable, Scene
from .milp.model import EQ, GE, LE, MilpModel, family_of
from .reach import ReachGraph

DEFAULT_CAP = 14
FAMILIES = ("occupancy", "capacity", "conservation", "junction", "payload", "integrality", "bounds")


class OracleError(ValueError):
    pass


@dataclass
class OracleReport:
    cost: float
    selection: list[str]  # labels of chosen placements
    junctions: list[tuple[str, tuple]]  # (kind, point)
    enumerated: int
    feasible_subsets: int = 0

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.cost)

    def as_text(self) -> str:
        lines = [f"feasible {str(self.feasible).lower()}", f"cost {self.cost!r}",
                 f"enumerated {self.enumerated}", f"feasible_subsets {self.feasible_subsets}"]
        lines += [f"select {s}" for s in self.selection]
        lines += [f"junction {k} {p[0]:g},{p[1]:g}" for k, p in self.junctions]
        return "\n".join(lines) + "\n"


def _slots(graph: ReachGraph) -> list[list[int]]:
    """Arms grouped by grid point (one slot each), then one slot per belt segment."""
    by_point: dict = {}
    belts = []
    for v in graph.placements():
        if v.kind == ARM:
            by_point.setdefault(v.point, []).append(v.id)
        else:
            belts.append([v.id])
    return list(by_point.values()) + belts


def brute_force_layout(graph: ReachGraph, scene: Scene, costs: CostTable | None = None,
                       cap: int = DEFAULT_CAP) -> OracleReport:
    """Cheapest set of placements (plus junctions) that delivers every box."""
    costs = costs or scene.costs
    catalog = {t.id: t for t in scene.catalog}
    verts = graph.vertices
    placements = graph.placements()
    if len(placements) > cap:
        raise OracleError(f"cap exceeded: {len(placements)} candidates > {cap}")
    weights = [o.weight for o in scene.outputs]

    def cost_of(v):
        r = catalog[v.robot]
        return r.cost if v.kind == ARM else costs.belt_per_meter * v.length + costs.motor

    slots = _slots(graph)
    best = OracleReport(math.inf, [], [], 0)
    for combo in itertools.product(*[[None] + s for s in slots]):
        best.enumerated += 1
        chosen = sorted(v for v in combo if v is not None)
        if not _placement_ok(chosen, verts):
            continue
        base = sum(cost_of(verts[v]) for v in chosen)
        # inline merges of collinear same-direction belts only ever lower the cost
        belts = [verts[v] for v in chosen if verts[v].kind == BELT]
        inline = [(a.id, b.id) for a in belts for b in belts
                  if a.end == b.point and a.direction == b.direction]
        base -= costs.motor * len(inline)
        if base >= best.cost - 1e-12 and best.feasible:
            continue
        found = _best_junctions(chosen, inline, verts, graph, catalog, weights, costs,
                                best.cost - base)
        if found is None:
            continue
        best.feasible_subsets += 1
        extra, junctions = found
        total = base + extra
        if total < best.cost - 1e-12:
            best.cost = total
            best.selection = [verts[v].label for v in chosen]
            best.junctions = junctions
    return best


def _placement_ok(chosen, verts) -> bool:
    arm_points = {verts[v].point for v in chosen if verts[v].kind == ARM}
    segs = set()
    for v in chosen:
        u = verts[v]
        if u.kind == BELT:
            if u.point in arm_points or u.end in arm_points or (u.end, u.point) in segs:
                return False
            segs.add((u.point, u.end))
    return True


def _best_junctions(chosen, inline, verts, graph, catalog, weights, costs, budget):
    """Cheapest junction configuration that makes every output reachable."""
    arm_points = {verts[v].point for v in chosen if verts[v].kind == ARM}
    ending: dict = {}
    starting: dict = {}
    for v in chosen:
        u = verts[v]
        if u.kind == BELT:
            ending.setdefault(u.end, []).append(v)
            starting.setdefault(u.point, []).append(v)
    points = sorted((p for p in ending if p in starting and p not in arm_points),
                    key=lambda p: (p[1], p[0]))
    options = []
    for p in points:
        opts = [(0.0, None, ())]
        opts += [(costs.turning, "turning", ((a, b),)) for a in ending[p] for b in starting[p]]
        opts.append((costs.multiway, "multiway",
                     tuple((a, b) for a in ending[p] for b in starting[p])))
        options.append(opts)
    full = [o[-1] for o in options]
    if not _connected(chosen, inline, full, verts, graph, catalog, weights):
        return None
    best = None
    for conf in itertools.product(*options):
        extra = sum(o[0] for o in conf)
        if extra >= budget - 1e-12 or (best is not None and extra >= best[0] - 1e-12):
            continue
        if _connected(chosen, inline, conf, verts, graph, catalog, weights):
            best = (extra, [(o[1], p) for o, p in zip(conf, points) if o[1]])
    return best


def _connected(chosen, inline, conf, verts, graph, catalog, weights) -> bool:
    sel = set(chosen)
    transfers: dict[int, list[int]] = {}
    for a, b in inline:
        transfers.setdefault(a, []).append(b)
    for o in conf:
        for a, b in o[2]:
            transfers.setdefault(a, []).append(b)
    payload = {v: catalog[verts[v].robot].payload for v in chosen}
    for i, w in enumerate(weights):
        target = graph.output(i)
        ok_nodes = {v for v in sel if payload[v] >= w}
        seen = {graph.input}
        dq = deque([graph.input])
        reached = False
        while dq and not reached:
            u = dq.popleft()
            nxt = list(graph.out_adj[u]) + transfers.get(u, [])
            for v in nxt:
                if v == target:
                    reached = True
                    break
                if v in ok_nodes and v not in seen:
                    seen.add(v)
                    dq.append(v)
        if not reached:
            return False
    return True


# --- verification ----------------------------------------------------------------

@dataclass
class Verdicts:
    max_residual: dict[str, float] = field(default_factory=dict)
    worst_row: dict[str, str | None] = field(default_factory=dict)

    def ok(self, tol: float = 1e-6) -> bool:
        return all(v <= tol for v in self.max_residual.values())

    def violated(self, tol: float = 1e-6) -> dict[str, str | None]:
        return {f: self.worst_row[f] for f, v in self.max_residual.items() if v > tol}

    def as_text(self) -> str:
        return "".join(f"{f} {self.max_residual[f]:.3e} {self.worst_row[f] or '-'}\n"
                       for f in FAMILIES)


def verify_solution(model: MilpModel, x) -> Verdicts:
    """Recompute every row residual and report the worst per constraint family."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n_vars,):
        raise ValueError(f"solution has {x.size} entries, model has {model.n_vars} variables")
    out = Verdicts({f: 0.0 for f in FAMILIES}, {f: None for f in FAMILIES})

    def note(fam, val, name):
        if val > out.max_residual[fam]:
            out.max_residual[fam] = float(val)
            out.worst_row[fam] = name

    A = model.A.tocsr()
    for i, name in enumerate(model.row_names):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        act = math.fsum(float(v) * x[j] for j, v in zip(A.indices[lo:hi], A.data[lo:hi]))
        s, b = model.sense[i], model.rhs[i]
        res = act - b if s == LE else (b - act if s == GE else abs(act - b))
        assert s in (LE, GE, EQ)
        note(family_of(name), max(0.0, res), name)
    for j in np.flatnonzero(model.is_int):
        note("integrality", abs(x[j] - round(x[j])), model.var_names[j])
    for j in range(model.n_vars):
        note("bounds", max(model.lb[j] - x[j], x[j] - model.ub[j], 0.0), model.var_names[j])
    return out


def finite_diff_gradient(fn: Callable[[np.ndarray], float], point, step: float = 1e-6) -> np.ndarray:
    x = np.array(point, dtype=float)
    g = np.zeros_like(x)
    for k in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp.flat[k] += step
        xm.flat[k] -= step
        g.flat[k] = (fn(xp) - fn(xm)) / (2 * step)
    return g
