import csv
import json

import pytest

from robolayout.cli import CSV_COLUMNS, main

CHAIN = "floor: {min: [0, 0], max: [1, 0]}\nspacing: 0.5\ninput: [0, 0]\noutputs: [[1, 0]]\n"
FAR = "floor: {min: [0, 0], max: [6, 0]}\nspacing: 3\ninput: [0, 0]\noutputs: [[6, 0]]\n"
BELT = ("floor: {min: [0, 0], max: [3, 1]}\nspacing: 0.5\ninput: [0, 0.5]\n"
        "outputs: [[3, 0.5]]\ncatalog: [UR5e, belt]\n")
TWO_BOX = ("floor: {min: [0, -0.5], max: [1, 0.5]}\nspacing: 0.5\ninput: [0, 0]\n"
           "outputs: [[1, 0], [0.5, 0.5]]\n")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    lines = capsys.readouterr().out.strip().splitlines()
    return code, json.loads(lines[-1])


@pytest.fixture
def files(tmp_path):
    for name, text in (("chain", CHAIN), ("far", FAR), ("belt", BELT), ("two", TWO_BOX)):
        (tmp_path / f"{name}.yaml").write_text(text)
    return tmp_path


def test_optimize_chain(files, capsys):
    code, status = run(capsys, "optimize", "--scene", files / "chain.yaml",
                       "--out", files / "layout.json", "--svg", files / "layout.svg")
    assert code == 0 and status["status"] == "optimal" and status["cost"] == 1.0
    doc = json.loads((files / "layout.json").read_text())
    assert doc["robots"] == [{"type": "UR5e", "x": 0.5, "y": 0.0}] and doc["total_cost"] == 1.0
    assert (files / "layout.svg").read_text().count('class="element"') == 1


def test_optimize_infeasible(files, capsys):
    code, status = run(capsys, "optimize", "--scene", files / "far.yaml")
    assert code == 2 and status["status"] == "infeasible"


def test_optimize_timeout(files, capsys):
    code, status = run(capsys, "optimize", "--scene", files / "belt.yaml", "--time-limit", "1e-4")
    assert code == 3 and status["status"] == "timeout"


def test_io_errors(files, capsys):
    code, status = run(capsys, "optimize", "--scene", files / "missing.yaml")
    assert code == 4 and status["status"] == "io_error"
    (files / "bad.yaml").write_text("floor: {min: [0, 0], max: [1, 0]}\nspacing: -1\n")
    code, status = run(capsys, "optimize", "--scene", files / "bad.yaml")
    assert code == 4 and status["status"] == "scene_error" and "spacing" in status["error"]


def test_oracle_and_baseline_methods(files, capsys):
    assert run(capsys, "optimize", "--scene", files / "chain.yaml", "--method", "oracle")[1]["cost"] == 1.0
    code, status = run(capsys, "baseline", "--scene", files / "chain.yaml")
    assert code == 0 and status["cost"] == 1.0


def test_verify_round_trip(files, capsys):
    run(capsys, "optimize", "--scene", files / "belt.yaml", "--lp", files / "m.lp",
        "--solution", files / "x.txt")
    code, status = run(capsys, "verify", "--lp", files / "m.lp", "--solution", files / "x.txt")
    assert code == 0 and max(status["max_residual"].values()) <= 1e-6
    lines = (files / "x.txt").read_text().splitlines()
    k = next(i for i, line in enumerate(lines) if line.startswith("s_"))
    lines[k] = lines[k].split()[0] + " 0.5"
    (files / "x.txt").write_text("\n".join(lines) + "\n")
    code, status = run(capsys, "verify", "--lp", files / "m.lp", "--solution", files / "x.txt")
    assert code == 2 and status["status"] == "verification_failure"
    assert "integrality" in status["violated"]


def test_replay_one_box(files, capsys):
    run(capsys, "optimize", "--scene", files / "chain.yaml", "--out", files / "l.json")
    code, status = run(capsys, "replay", "--scene", files / "chain.yaml", "--layout", files / "l.json",
                       "--out", files / "replay", "--steps-per-dt", 10)
    assert code == 0 and status["max_residual"] < 1e-3
    rows = list(csv.DictReader((files / "replay" / "trajectories.csv").open()))
    assert len(rows) == 11 and {r["robot"] for r in rows} == {"UR5e@0.5,0"}
    assert (files / "replay" / "storyboard.svg").exists()


def test_schedule_conflicting_boxes(files, capsys):
    layout = {"robots": [{"type": "UR5e", "x": 0.5, "y": -0.5}], "belts": [], "junctions": [],
              "paths": [["in", "UR5e@0.5,-0.5", "out1"], ["in", "UR5e@0.5,-0.5", "out2"]],
              "total_cost": 1.0}
    (files / "shared.json").write_text(json.dumps(layout))
    code, _ = run(capsys, "schedule", "--scene", files / "two.yaml", "--layout", files / "shared.json",
                  "--out", files / "s.json", "--dt", 1.0)
    assert code == 0
    sched = json.loads((files / "s.json").read_text())
    assert sched["boxes"][1][0]["start"] == 1.0


def test_replay_belt_grasps_constant(files, capsys):
    run(capsys, "optimize", "--scene", files / "belt.yaml", "--out", files / "l.json")
    code, _ = run(capsys, "replay", "--scene", files / "belt.yaml", "--layout", files / "l.json",
                  "--out", files / "replay")
    assert code == 0
    rows = [r for r in csv.DictReader((files / "replay" / "trajectories.csv").open())
            if r["robot"].startswith("belt")]
    assert rows
    grasp = {}
    for r in rows:
        grasp.setdefault((r["robot"], r["q3"]), set()).add(r["q2"])
    assert all(len(v) == 1 for v in grasp.values())


def test_replay_residual_failure(files, capsys):
    layout = {"robots": [{"type": "UR5e", "x": 0.5, "y": -0.5}], "belts": [], "junctions": [],
              "paths": [["in", "UR5e@0.5,-0.5", "out1"]], "total_cost": 1.0}
    (files / "bad.json").write_text(json.dumps(layout))
    # the arm reaches the input but the output is 1.58 m away from it
    (files / "far_out.yaml").write_text(
        "floor: {min: [0, -0.5], max: [2, 0.5]}\nspacing: 0.5\ninput: [0, 0]\noutputs: [[2, 0]]\n")
    code, status = run(capsys, "replay", "--scene", files / "far_out.yaml", "--layout",
                       files / "bad.json", "--out", files / "r")
    assert code == 2 and status["status"] == "residual_failure" and status["constraint"]


def test_render(files, capsys):
    run(capsys, "optimize", "--scene", files / "belt.yaml", "--out", files / "l.json")
    code, status = run(capsys, "render", "--scene", files / "belt.yaml", "--layout", files / "l.json",
                       "--out", files / "r.svg")
    assert code == 0
    assert (files / "r.svg").read_text().count('class="element"') == status["elements"]


def read_rows(path):
    return list(csv.DictReader(open(path)))


def test_benchmark_deterministic(files, capsys):
    args = ["benchmark", "--seed", 5, "--outputs", "2,3", "--instances", 2, "--size", 3,
            "--resolution", "0.5", "--jobs", 2]
    for name in ("a.csv", "b.csv"):
        code, _ = run(capsys, *args, "--out", files / name)
        assert code == 0
    a, b = read_rows(files / "a.csv"), read_rows(files / "b.csv")
    assert list(a[0]) == list(CSV_COLUMNS)
    strip = lambda rows: [{k: v for k, v in r.items() if k != "time_ms"} for r in rows]  # noqa: E731
    assert strip(a) == strip(b) and len(a) == 8
    by_instance = {}
    for r in a:
        by_instance.setdefault(r["instance"], {})[r["method"]] = r
    for runs in by_instance.values():
        if all(r["status"] == "optimal" for r in runs.values()):
            assert runs["milp"]["cost"] == runs["astar"]["cost"]


def test_benchmark_five_outputs(files, capsys):
    run(capsys, "benchmark", "--seed", 2, "--outputs", "5", "--instances", 3, "--size", 3,
        "--resolution", "0.5", "--jobs", 3, "--out", files / "c.csv")
    rows = read_rows(files / "c.csv")
    rate = {m: sum(r["status"] == "optimal" for r in rows if r["method"] == m) for m in ("milp", "astar")}
    assert rate["astar"] <= rate["milp"]
