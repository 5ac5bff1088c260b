"""End-to-end helpers shared by the CLI, tests and benchmarks."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .astar import SearchParams, SearchResult, astar_layout
from .core import DEFAULT_CATALOG, Output, Scene
from .milp import MilpModel, MilpSolution, SolverParams, solve_milp
from .netmodel import FlowNetwork, Layout, build_network, compile_milp, extract_layout
from .reach import ReachGraph, build_reachability_graph


@dataclass
class OptimizeResult:
    scene: Scene
    graph: ReachGraph
    network: FlowNetwork
    model: MilpModel
    solution: MilpSolution
    layout: Layout | None
    elapsed_s: float

    @property
    def status(self) -> str:
        return self.solution.status

    @property
    def cost(self) -> float:
        return self.layout.total_cost if self.layout else math.inf


def optimize(scene: Scene, params: SolverParams | None = None, **overrides) -> OptimizeResult:
    """Reachability graph, flow network, MILP solve and layout extraction."""
    start = time.monotonic()
    graph = build_reachability_graph(scene)
    net = build_network(graph, scene)
    model = compile_milp(net, scene)
    sol = solve_milp(model, params, **overrides)
    layout = extract_layout(net, sol, scene) if sol.x is not None else None
    return OptimizeResult(scene, graph, net, model, sol, layout, time.monotonic() - start)


def baseline(scene: Scene, params: SearchParams | None = None, **overrides) -> SearchResult:
    graph = build_reachability_graph(scene)
    return astar_layout(scene, graph, params, **overrides)


# --- benchmark instances -------------------------------------------------------------

def benchmark_scene(seed: int, n_outputs: int, resolution: float = 0.5, size: float = 8.0,
                    strip: float | None = None, min_gap: float = 1.0,
                    catalog=DEFAULT_CATALOG) -> Scene:
    """Random instance: floor [0,size] x [-size/2,size/2], input at the origin,
    outputs sampled in the far strip ``x >= size - strip`` at least ``min_gap`` apart."""
    strip = size / 4 if strip is None else strip
    rng = np.random.default_rng(seed)
    half = size / 2
    outs: list[tuple[float, float]] = []
    tries = 0
    while len(outs) < n_outputs:
        tries += 1
        if tries > 10_000:
            raise ValueError(f"cannot place {n_outputs} outputs {min_gap} m apart")
        p = (round(float(rng.uniform(size - strip, size)), 6), round(float(rng.uniform(-half, half)), 6))
        if all(math.dist(p, q) >= min_gap for q in outs):
            outs.append(p)
    return Scene((0.0, -half), (size, half), resolution, (0.0, 0.0),
                 tuple(Output(p) for p in outs), tuple(catalog))
