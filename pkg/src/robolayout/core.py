"""Domain types, the default robot catalog, scene parsing and the floor grid."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import yaml

Point = tuple[float, float]

ARM = "arm"
BELT = "belt"

# Eight unit travel directions for belt segments, counter-clockwise from east.
DIRECTIONS: tuple[tuple[int, int], ...] = (
    (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1),
)
DIRECTION_NAMES = ("E", "NE", "N", "NW", "W", "SW", "S", "SE")


class SceneError(ValueError):
    """Invalid scene document; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass(frozen=True)
class RobotType:
    id: str
    kind: str
    cost: float = 0.0
    reach_min: float = 0.0
    reach_max: float = 0.0
    clearance: float = 0.0
    payload: float = 0.0

    def __post_init__(self):
        if self.kind not in (ARM, BELT):
            raise SceneError("catalog.kind", f"unknown robot kind {self.kind!r}")
        if self.payload <= 0:
            raise SceneError("catalog.payload", f"{self.id}: payload must be positive")
        if self.cost < 0:
            raise SceneError("catalog.cost", f"{self.id}: cost must be nonnegative")
        if self.kind == ARM:
            if not 0 <= self.reach_min < self.reach_max:
                raise SceneError("catalog.reach", f"{self.id}: need 0 <= reach_min < reach_max")
            if self.clearance <= 0:
                raise SceneError("catalog.clearance", f"{self.id}: clearance must be positive")

    @property
    def is_arm(self) -> bool:
        return self.kind == ARM


@dataclass(frozen=True)
class CostTable:
    belt_per_meter: float = 0.2
    motor: float = 0.1
    multiway: float = 0.1
    turning: float = 0.05

    def __post_init__(self):
        for name in ("belt_per_meter", "motor", "multiway", "turning"):
            if getattr(self, name) < 0:
                raise SceneError(f"costs.{name}", "must be nonnegative")

    def scaled(self, factor: float) -> "CostTable":
        return CostTable(*(factor * getattr(self, k) for k in
                           ("belt_per_meter", "motor", "multiway", "turning")))

    def belt_cost(self, length: float) -> float:
        """A unit segment carries its own motor."""
        return self.belt_per_meter * length + self.motor


UR5E = RobotType("UR5e", ARM, cost=1.0, reach_min=0.18, reach_max=0.85,
                 clearance=0.15, payload=5.0)
IRB4600 = RobotType("IRB4600", ARM, cost=3.0, reach_min=0.4, reach_max=2.05,
                    clearance=0.35, payload=60.0)
BELT_SEGMENT = RobotType("belt", BELT, payload=20.0)

KNOWN_TYPES = {t.id: t for t in (UR5E, IRB4600, BELT_SEGMENT)}
DEFAULT_CATALOG = (UR5E,)


@dataclass(frozen=True)
class Output:
    pos: Point
    weight: float = 1.0


@dataclass(frozen=True)
class Scene:
    floor_min: Point
    floor_max: Point
    spacing: float
    input: Point
    outputs: tuple[Output, ...]
    catalog: tuple[RobotType, ...] = DEFAULT_CATALOG
    costs: CostTable = field(default_factory=CostTable)

    def __post_init__(self):
        if not self.spacing > 0:
            raise SceneError("spacing", "nonpositive spacing")
        if not (self.floor_min[0] < self.floor_max[0] or self.floor_min[1] < self.floor_max[1]):
            raise SceneError("floor", "floor_min must be below floor_max")
        if self.floor_min[0] > self.floor_max[0] or self.floor_min[1] > self.floor_max[1]:
            raise SceneError("floor", "floor_min must be below floor_max")
        if not self.outputs:
            raise SceneError("outputs", "zero outputs")
        for k, out in enumerate(self.outputs):
            if not self.contains(out.pos):
                raise SceneError(f"outputs[{k}].pos", "output outside floor")
            if out.weight < 0:
                raise SceneError(f"outputs[{k}].weight", "negative weight")
        ids = [t.id for t in self.catalog]
        if len(set(ids)) != len(ids):
            raise SceneError("catalog", "duplicate robot ids")

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    def contains(self, p: Point, tol: float = 1e-9) -> bool:
        return (self.floor_min[0] - tol <= p[0] <= self.floor_max[0] + tol
                and self.floor_min[1] - tol <= p[1] <= self.floor_max[1] + tol)

    def arm_types(self) -> list[RobotType]:
        return [t for t in self.catalog if t.kind == ARM]

    def belt_type(self) -> RobotType | None:
        for t in self.catalog:
            if t.kind == BELT:
                return t
        return None

    def robot(self, type_id: str) -> RobotType:
        for t in self.catalog:
            if t.id == type_id:
                return t
        raise KeyError(type_id)

    def with_catalog(self, catalog: Sequence[RobotType]) -> "Scene":
        return replace(self, catalog=tuple(catalog))

    def with_costs(self, costs: CostTable) -> "Scene":
        return replace(self, costs=costs)


def _axis(lo: float, hi: float, spacing: float) -> list[float]:
    n = int(math.floor((hi - lo) / spacing + 1e-9)) + 1
    return [round(lo + k * spacing, 12) for k in range(n)]


def grid_points(scene: Scene) -> list[Point]:
    """Row-major lattice (y outer, x inner) covering the closed floor rectangle."""
    xs = _axis(scene.floor_min[0], scene.floor_max[0], scene.spacing)
    ys = _axis(scene.floor_min[1], scene.floor_max[1], scene.spacing)
    return [(x, y) for y in ys for x in xs]


# --- document IO -----------------------------------------------------------

def _point(value: Any, path: str) -> Point:
    try:
        x, y = value
        return float(x), float(y)
    except (TypeError, ValueError):
        raise SceneError(path, f"expected [x, y], got {value!r}") from None


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneError(path, f"expected a number, got {value!r}")
    return float(value)


def _robot_entry(entry: Any, k: int) -> RobotType:
    path = f"catalog[{k}]"
    if isinstance(entry, str):
        entry = {"id": entry}
    if not isinstance(entry, dict) or "id" not in entry:
        raise SceneError(path, "catalog entries need an id")
    base = KNOWN_TYPES.get(entry["id"])
    fields = {} if base is None else {
        "kind": base.kind, "cost": base.cost, "reach_min": base.reach_min,
        "reach_max": base.reach_max, "clearance": base.clearance, "payload": base.payload}
    for key in ("cost", "reach_min", "reach_max", "clearance", "payload"):
        if key in entry:
            fields[key] = _number(entry[key], f"{path}.{key}")
    if "kind" in entry:
        fields["kind"] = entry["kind"]
    if "kind" not in fields:
        raise SceneError(f"{path}.kind", f"unknown robot {entry['id']!r} needs a kind")
    try:
        return RobotType(id=str(entry["id"]), **fields)
    except TypeError as exc:
        raise SceneError(path, str(exc)) from None
    except SceneError as exc:
        raise SceneError(f"{path}.{exc.path.split('.')[-1]}", exc.message) from None


def scene_from_dict(doc: Any) -> Scene:
    if not isinstance(doc, dict):
        raise SceneError("<root>", "malformed document: expected a mapping")
    if "floor" not in doc or not isinstance(doc["floor"], dict):
        raise SceneError("floor", "missing floor")
    floor_min = _point(doc["floor"].get("min"), "floor.min")
    floor_max = _point(doc["floor"].get("max"), "floor.max")
    if "spacing" not in doc:
        raise SceneError("spacing", "missing spacing")
    spacing = _number(doc["spacing"], "spacing")
    if spacing <= 0:
        raise SceneError("spacing", "nonpositive spacing")
    if "input" not in doc:
        raise SceneError("input", "missing input")
    inp = _point(doc["input"], "input")
    outs_doc = doc.get("outputs")
    if not isinstance(outs_doc, list):
        raise SceneError("outputs", "missing outputs list")
    if not outs_doc:
        raise SceneError("outputs", "zero outputs")
    outputs = []
    for k, o in enumerate(outs_doc):
        if isinstance(o, dict):
            pos = _point(o.get("pos"), f"outputs[{k}].pos")
            weight = _number(o.get("weight", 1.0), f"outputs[{k}].weight")
        else:
            pos, weight = _point(o, f"outputs[{k}]"), 1.0
        outputs.append(Output(pos, weight))
    costs_doc = doc.get("costs") or {}
    if not isinstance(costs_doc, dict):
        raise SceneError("costs", "expected a mapping")
    cost_kwargs = {k: _number(costs_doc[k], f"costs.{k}")
                   for k in ("belt_per_meter", "motor", "multiway", "turning") if k in costs_doc}
    unknown = set(costs_doc) - {"belt_per_meter", "motor", "multiway", "turning"}
    if unknown:
        raise SceneError(f"costs.{sorted(unknown)[0]}", "unknown cost key")
    if "catalog" in doc:
        if not isinstance(doc["catalog"], list) or not doc["catalog"]:
            raise SceneError("catalog", "catalog must be a nonempty list")
        catalog = tuple(_robot_entry(e, k) for k, e in enumerate(doc["catalog"]))
    else:
        catalog = DEFAULT_CATALOG
    return Scene(floor_min, floor_max, spacing, inp, tuple(outputs), catalog,
                 CostTable(**cost_kwargs))


def parse_scene(text: str) -> Scene:
    """Parse a YAML (or JSON) scene document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SceneError("<root>", f"malformed document: {exc}") from None
    return scene_from_dict(doc)


def scene_to_dict(scene: Scene) -> dict:
    return {
        "floor": {"min": list(scene.floor_min), "max": list(scene.floor_max)},
        "spacing": scene.spacing,
        "input": list(scene.input),
        "outputs": [{"pos": list(o.pos), "weight": o.weight} for o in scene.outputs],
        "catalog": [{"id": t.id, "kind": t.kind, "cost": t.cost, "reach_min": t.reach_min,
                     "reach_max": t.reach_max, "clearance": t.clearance,
                     "payload": t.payload} for t in scene.catalog],
        "costs": {"belt_per_meter": scene.costs.belt_per_meter, "motor": scene.costs.motor,
                  "multiway": scene.costs.multiway, "turning": scene.costs.turning},
    }


def dump_scene(scene: Scene) -> str:
    return yaml.safe_dump(scene_to_dict(scene), sort_keys=False)


def dist(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])
