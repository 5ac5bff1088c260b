"""Per-box robot sequences and conflict-free task intervals.

Every robot takes the same time ``dt`` to carry a box one hop. Boxes with
longer sequences go first; a box whose tasks collide with an earlier box on
the same robot is shifted later as a whole, one ``dt`` at a time.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .netmodel import Layout, is_io_label


@dataclass(frozen=True)
class Task:
    box: int
    robot: str
    start: float
    end: float


@dataclass
class Schedule:
    sequences: list[tuple[str, ...]]
    order: list[int]
    dt: float
    offsets: list[float] = field(default_factory=list)  # start time of each box

    def tasks(self, box: int) -> list[Task]:
        t0 = self.offsets[box]
        return [Task(box, r, t0 + k * self.dt, t0 + (k + 1) * self.dt)
                for k, r in enumerate(self.sequences[box])]

    def all_tasks(self) -> list[Task]:
        return [t for b in range(len(self.sequences)) for t in self.tasks(b)]

    def by_robot(self) -> dict[str, list[Task]]:
        out: dict[str, list[Task]] = {}
        for t in self.all_tasks():
            out.setdefault(t.robot, []).append(t)
        for ts in out.values():
            ts.sort(key=lambda t: (t.start, t.box))
        return out

    @property
    def makespan(self) -> float:
        return max((t.end for t in self.all_tasks()), default=0.0)

    def conflicts(self) -> list[tuple[Task, Task]]:
        """Overlapping task pairs on the same robot (empty for a valid schedule)."""
        bad = []
        for ts in self.by_robot().values():
            for a, b in zip(ts, ts[1:]):
                if b.start < a.end:
                    bad.append((a, b))
        return bad

    def to_dict(self) -> dict:
        return {"dt": self.dt, "order": list(self.order), "makespan": self.makespan,
                "boxes": [[{"robot": t.robot, "start": t.start, "end": t.end} for t in self.tasks(b)]
                          for b in range(len(self.sequences))]}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def assign_paths(layout: Layout) -> list[tuple[str, ...]]:
    """Robot sequence of each box: its path with io ports and junctions dropped."""
    seqs = []
    for path in layout.paths:
        seq = []
        for label in path:
            if is_io_label(label):
                continue
            el = layout.elements.get(label)
            if el is not None and not el.is_robot:
                continue
            if label.startswith("J:"):
                continue
            seq.append(label)
        seqs.append(tuple(seq))
    return seqs


def order_deliveries(sequences: Sequence[Sequence[str]]) -> list[int]:
    return sorted(range(len(sequences)), key=lambda i: (-len(sequences[i]), i))


def build_schedule(sequences: Sequence[Sequence[str]], order: Sequence[int] | None = None,
                   dt: float = 1.0) -> Schedule:
    seqs = [tuple(s) for s in sequences]
    order = list(order) if order is not None else order_deliveries(seqs)
    offsets = [0.0] * len(seqs)
    busy: dict[str, list[tuple[float, float]]] = {}
    for b in order:
        t0 = 0.0
        while any(s < t0 + (k + 1) * dt and t0 + k * dt < e
                  for k, r in enumerate(seqs[b]) for s, e in busy.get(r, ())):
            t0 += dt
        offsets[b] = t0
        for k, r in enumerate(seqs[b]):
            busy.setdefault(r, []).append((t0 + k * dt, t0 + (k + 1) * dt))
    return Schedule(seqs, order, dt, offsets)


def schedule_layout(layout: Layout, dt: float = 1.0) -> Schedule:
    seqs = assign_paths(layout)
    return build_schedule(seqs, order_deliveries(seqs), dt)
