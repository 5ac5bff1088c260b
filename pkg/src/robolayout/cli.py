"""Command-line entry points.

Every command prints one JSON status line on stdout and exits with
0 (ok), 2 (infeasible, residual or verification failure), 3 (timeout)
or 4 (file or scene error).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import astar
from .core import SceneError, Scene, parse_scene
from .milp import INFEASIBLE, OPTIMAL, TIMEOUT, read_lp, read_solution, write_lp, write_solution
from .motion import MotionError, build_motion_problem, solve_trajectories
from .netmodel import LayoutError, layout_from_dict
from .oracle import OracleError, brute_force_layout, verify_solution
from .pipeline import benchmark_scene, optimize
from .reach import build_reachability_graph
from .render import render_layout, render_storyboard
from .sched import Schedule, schedule_layout

EXIT_OK, EXIT_FAIL, EXIT_TIMEOUT, EXIT_IO = 0, 2, 3, 4
CSV_COLUMNS = ("instance", "resolution", "n_outputs", "method", "time_ms", "cost", "status")


class CliError(Exception):
    def __init__(self, status: str, message: str, code: int = EXIT_IO):
        super().__init__(message)
        self.status = status
        self.code = code


def _emit(status: str, **fields) -> None:
    print(json.dumps({"status": status, **fields}), flush=True)


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError("io_error", f"cannot read {path}: {exc.strerror}") from None


def _write(path, text: str) -> None:
    try:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    except OSError as exc:
        raise CliError("io_error", f"cannot write {path}: {exc.strerror}") from None


def _scene(args) -> Scene:
    if not args.scene:
        raise CliError("io_error", "--scene is required")
    try:
        return parse_scene(_read(args.scene))
    except SceneError as exc:
        raise CliError("scene_error", str(exc)) from None


def _layout(args, scene):
    if not args.layout:
        raise CliError("io_error", "--layout is required")
    try:
        return layout_from_dict(json.loads(_read(args.layout)), scene)
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise CliError("io_error", f"bad layout document {args.layout}: {exc}") from None


def _status_code(status: str) -> int:
    return {OPTIMAL: EXIT_OK, astar.OK: EXIT_OK, TIMEOUT: EXIT_TIMEOUT,
            astar.TIMEOUT: EXIT_TIMEOUT}.get(status, EXIT_FAIL)


# --- commands ----------------------------------------------------------------------

def cmd_optimize(args) -> int:
    scene = _scene(args)
    if args.method == "astar":
        return cmd_baseline(args)
    if args.method == "oracle":
        start = time.monotonic()
        try:
            rep = brute_force_layout(build_reachability_graph(scene), scene)
        except OracleError as exc:
            raise CliError("cap_exceeded", str(exc), EXIT_FAIL) from None
        ms = round(1000 * (time.monotonic() - start), 3)
        if args.out:
            _write(args.out, rep.as_text())
        if not rep.feasible:
            _emit(INFEASIBLE, method="oracle", time_ms=ms)
            return EXIT_FAIL
        _emit(OPTIMAL, method="oracle", cost=rep.cost, time_ms=ms, enumerated=rep.enumerated)
        return EXIT_OK
    res = optimize(scene, time_limit_s=args.time_limit, abs_gap=args.gap)
    if args.lp:
        _write(args.lp, write_lp(res.model))
    if args.solution and res.solution.x is not None:
        _write(args.solution, write_solution(res.model.var_names, res.solution.x,
                                             res.solution.objective, res.status))
    ms = round(1000 * res.elapsed_s, 3)
    if res.layout is None:
        _emit(res.status, method="milp", time_ms=ms, nodes=res.solution.nodes)
        return _status_code(res.status) or EXIT_FAIL
    if args.out:
        _write(args.out, res.layout.dumps())
    if args.svg:
        _write(args.svg, render_layout(scene, res.layout))
    _emit(res.status, method="milp", cost=res.layout.total_cost, time_ms=ms,
          nodes=res.solution.nodes, elements=len(res.layout.elements))
    return _status_code(res.status)


def cmd_baseline(args) -> int:
    scene = _scene(args)
    graph = build_reachability_graph(scene)
    res = astar.astar_layout(scene, graph, time_limit_s=args.time_limit)
    ms = round(1000 * res.elapsed_s, 3)
    if res.layout is None:
        _emit(res.status, method="astar", time_ms=ms, expanded=res.expanded)
        return _status_code(res.status)
    if args.out:
        _write(args.out, res.layout.dumps())
    if args.svg:
        _write(args.svg, render_layout(scene, res.layout))
    _emit(res.status, method="astar", cost=res.cost, time_ms=ms, expanded=res.expanded)
    return EXIT_OK


def _bench_run(job) -> dict:
    instance, seed, resolution, n_outputs, size, method, time_limit = job
    row = {"instance": instance, "resolution": resolution, "n_outputs": n_outputs,
           "method": method, "time_ms": "", "cost": "", "status": ""}
    start = time.monotonic()
    try:
        scene = benchmark_scene(seed, n_outputs, resolution, size)
        if method == "milp":
            res = optimize(scene, time_limit_s=time_limit)
            status, cost = res.status, res.cost
        else:
            graph = build_reachability_graph(scene)
            res = astar.astar_layout(scene, graph, time_limit_s=time_limit)
            status, cost = res.status, res.cost
        if status == astar.OK:
            status = OPTIMAL
    except Exception as exc:  # noqa: BLE001 -- a failed run becomes a row
        status, cost = f"error:{type(exc).__name__}", math.inf
    row["time_ms"] = f"{1000 * (time.monotonic() - start):.1f}"
    row["cost"] = f"{cost:.6f}" if math.isfinite(cost) else ""
    row["status"] = status
    return row


def benchmark_jobs(seed: int, resolutions, outputs, instances: int, size: float,
                   methods=("milp", "astar"), time_limit: float = 300.0) -> list[tuple]:
    jobs = []
    for res in resolutions:
        for n in outputs:
            for k in range(instances):
                inst_seed = seed * 1_000_003 + n * 1009 + k
                for m in methods:
                    jobs.append((f"n{n}-{k}", inst_seed, res, n, size, m, time_limit))
    return jobs


def run_benchmark(jobs, workers: int = 1) -> list[dict]:
    if workers <= 1:
        return [_bench_run(j) for j in jobs]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_bench_run, jobs))


def cmd_benchmark(args) -> int:
    methods = ("milp", "astar") if args.method in (None, "both") else (args.method,)
    jobs = benchmark_jobs(args.seed, args.resolution, args.outputs, args.instances, args.size,
                          methods, args.time_limit)
    rows = run_benchmark(jobs, args.jobs)
    if args.out:
        try:
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
            with open(args.out, "w", newline="") as fh:
                w = csv.DictWriter(fh, CSV_COLUMNS, lineterminator="\n")
                w.writeheader()
                w.writerows(rows)
        except OSError as exc:
            raise CliError("io_error", f"cannot write {args.out}: {exc.strerror}") from None
    else:
        w = csv.DictWriter(sys.stderr, CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    solved = sum(r["status"] == OPTIMAL for r in rows)
    _emit("ok", runs=len(rows), solved=solved)
    return EXIT_OK


def cmd_schedule(args) -> int:
    scene = _scene(args)
    layout = _layout(args, scene)
    sched = schedule_layout(layout, args.dt)
    if args.out:
        _write(args.out, sched.dumps())
    _emit("ok", makespan=sched.makespan, boxes=len(sched.sequences))
    return EXIT_OK


def cmd_replay(args) -> int:
    scene = _scene(args)
    layout = _layout(args, scene)
    sched: Schedule = schedule_layout(layout, args.dt)
    out = Path(args.out or ".")
    _write(out / "schedule.json", sched.dumps())
    try:
        problem = build_motion_problem(sched, layout, scene, steps_per_dt=args.steps_per_dt)
    except ValueError as exc:
        raise CliError("bad_layout", str(exc), EXIT_FAIL) from None
    try:
        traj = solve_trajectories(problem)
    except MotionError as exc:
        _emit("residual_failure", constraint=exc.constraint,
              residual=exc.residual if math.isfinite(exc.residual) else None)
        return EXIT_FAIL
    _write(out / "trajectories.csv", traj.to_csv())
    _write(out / "storyboard.svg", render_storyboard(scene, layout, traj, args.frame_every))
    _emit("ok", makespan=sched.makespan, steps=problem.n, max_residual=traj.max_residual,
          objective=traj.objective)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.lp:
        model = read_lp(_read(args.lp))
        if not args.solution:
            raise CliError("io_error", "--solution is required with --lp")
        x = read_solution(_read(args.solution), model.var_names)
    else:
        res = optimize(_scene(args), time_limit_s=args.time_limit, abs_gap=args.gap)
        if res.solution.x is None:
            _emit(res.status)
            return _status_code(res.status) or EXIT_FAIL
        model, x = res.model, res.solution.x
    verdicts = verify_solution(model, x)
    if args.out:
        _write(args.out, verdicts.as_text())
    ok = verdicts.ok(args.tol)
    _emit("ok" if ok else "verification_failure", max_residual=verdicts.max_residual,
          violated=verdicts.violated(args.tol))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_render(args) -> int:
    scene = _scene(args)
    layout = _layout(args, scene)
    svg = render_layout(scene, layout, show_paths=not args.no_paths)
    _write(args.out or args.svg or "layout.svg", svg)
    _emit("ok", elements=len(layout.elements))
    return EXIT_OK


# --- argument parsing --------------------------------------------------------------

def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out += range(int(lo), int(hi) + 1)
        elif part:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robolayout", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scene", help="scene document (YAML or JSON)")
    common.add_argument("--out", help="main output file or directory")
    common.add_argument("--time-limit", type=_positive, default=300.0, help="seconds (default 300)")
    common.add_argument("--gap", type=float, default=1e-6, help="absolute optimality gap")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--method", choices=("milp", "astar", "oracle", "both"), default=None)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", parents=[common], help="solve the layout MILP")
    p.add_argument("--svg")
    p.add_argument("--lp", help="also write the model in LP format")
    p.add_argument("--solution", help="also write the raw variable values")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("baseline", parents=[common], help="A* search over arm placements")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("benchmark", parents=[common], help="random-instance sweep, CSV report")
    p.add_argument("--resolution", type=_float_list, default=[0.5], help="comma list of spacings")
    p.add_argument("--outputs", type=_int_list, default=[2, 3, 4, 5], help="e.g. 2-5 or 2,4")
    p.add_argument("--instances", type=int, default=10, help="instances per (resolution, N)")
    p.add_argument("--size", type=_positive, default=8.0, help="floor edge length in meters")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_benchmark)

    for name, func, helptext in (("schedule", cmd_schedule, "delivery order and task intervals"),
                                 ("replay", cmd_replay, "schedule plus trajectory optimization")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--layout", help="layout document from optimize")
        p.add_argument("--dt", type=_positive, default=1.0, help="task duration")
        p.add_argument("--steps-per-dt", type=int, default=10)
        p.add_argument("--frame-every", type=int, default=10, help="storyboard frame spacing")
        p.set_defaults(func=func)

    p = sub.add_parser("verify", parents=[common], help="recheck every constraint row")
    p.add_argument("--lp", help="model in LP format")
    p.add_argument("--solution", help="variable values matching --lp")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("render", parents=[common], help="SVG drawing of a layout")
    p.add_argument("--layout")
    p.add_argument("--svg")
    p.add_argument("--no-paths", action="store_true")
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _emit(exc.status, error=str(exc))
        return exc.code
    except LayoutError as exc:
        _emit("layout_error", error=str(exc))
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
