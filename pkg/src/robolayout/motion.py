"""Planar trajectory optimization that replays a schedule.

Arms are 3-link planar chains; belts are prismatic tracks whose boxes ride at
fixed grasp offsets. Pick, place and handover events become equality
constraints, collision discs and on-belt limits become inequalities. The
penalized problem is solved with Gauss-Newton on a sparse Jacobian:

    F(x) = |r_obj|^2 + mu_eq |r_eq|^2 + mu_in sum max(0, margin - c)^3

The cubic term enters the least-squares residual as ``max(0, margin - c)^1.5``.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .core import ARM, BELT, Point, Scene
from .netmodel import Layout
from .sched import Schedule

log = logging.getLogger(__name__)

DISC_FRACTIONS = (0.25, 0.75)


class MotionError(RuntimeError):
    """Constraints could not be met; carries the worst residual and its name."""

    def __init__(self, constraint: str, residual: float):
        super().__init__(f"residual failure: {constraint} = {residual:.3e}")
        self.constraint = constraint
        self.residual = residual


def _wrap(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


@dataclass
class PlanarArm:
    name: str
    base: Point
    lengths: tuple[float, float, float]
    clearance: float = 0.15
    qmin: float = -math.pi
    qmax: float = math.pi
    yaw: float = 0.0  # mounting heading; the first joint is measured from it

    @classmethod
    def for_robot(cls, name, base, reach_min, reach_max, clearance, yaw=0.0):
        half = (reach_max - reach_min) / 2
        return cls(name, tuple(base), (half, half, reach_min), clearance, yaw=yaw)

    @property
    def reach(self) -> float:
        return float(sum(self.lengths))

    def chain_point(self, q: np.ndarray, link: int, frac: float = 1.0):
        """World position of a point on ``link`` and its Jacobian wrt the 3 joints.

        ``q`` has shape (T, 3); returns positions (T, 2) and Jacobians (T, 2, 3).
        """
        q = np.atleast_2d(q)
        phi = np.cumsum(q, axis=1) + self.yaw
        c, s = np.cos(phi), np.sin(phi)
        L = np.array(self.lengths, dtype=float)
        w = np.zeros(3)
        w[:link] = L[:link]
        w[link] = frac * L[link]
        pos = np.stack([c @ w, s @ w], axis=1) + np.asarray(self.base)
        jac = np.zeros((q.shape[0], 2, 3))
        # d/dq_m of sum_{k>=m} w_k u_k = sum_{k>=m} w_k u_k_perp
        tail_x = np.cumsum((-s * w)[:, ::-1], axis=1)[:, ::-1]
        tail_y = np.cumsum((c * w)[:, ::-1], axis=1)[:, ::-1]
        jac[:, 0, :] = tail_x
        jac[:, 1, :] = tail_y
        return pos, jac

    def forward(self, q):
        """End-effector pose (x, y, heading) for one joint vector."""
        pos, _ = self.chain_point(np.asarray(q, dtype=float)[None, :], 2, 1.0)
        return float(pos[0, 0]), float(pos[0, 1]), float(np.sum(q) + self.yaw)

    def inverse(self, x: float, y: float, heading: float, elbow: int = 1) -> np.ndarray:
        """Closed-form IK for one elbow branch (+1 or -1).

        Wrists out of reach are pulled onto the workspace boundary, so the
        result is always defined (it is only used to seed the optimizer).
        """
        l1, l2, l3 = self.lengths
        wx = x - l3 * math.cos(heading) - self.base[0]
        wy = y - l3 * math.sin(heading) - self.base[1]
        r = math.hypot(wx, wy)
        r = min(max(r, abs(l1 - l2) + 1e-6), l1 + l2 - 1e-9)
        cos2 = (r * r - l1 * l1 - l2 * l2) / (2 * l1 * l2)
        q2 = elbow * math.acos(max(-1.0, min(1.0, cos2)))
        q1 = math.atan2(wy, wx) - math.atan2(l2 * math.sin(q2), l1 + l2 * math.cos(q2)) - self.yaw
        q3 = heading - self.yaw - q1 - q2
        return _wrap(np.array([q1, q2, q3]))


def forward_kinematics(arm: PlanarArm, joints) -> tuple[float, float, float]:
    return arm.forward(joints)


@dataclass
class BeltTrack:
    name: str
    start: Point
    end: Point
    boxes: list[int] = field(default_factory=list)  # boxes that ride this belt

    @property
    def length(self) -> float:
        return math.dist(self.start, self.end)

    @property
    def mid(self) -> np.ndarray:
        return (np.asarray(self.start) + np.asarray(self.end)) / 2

    @property
    def axis(self) -> np.ndarray:
        return (np.asarray(self.end) - np.asarray(self.start)) / self.length


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float


@dataclass
class MotionProblem:
    n: int  # time steps are 0..n
    arms: list[PlanarArm]
    belts: list[BeltTrack]
    pick: list[tuple[int, str, Pose, int]]  # (box, robot, pose, t)
    place: list[tuple[int, str, Pose, int]]
    hand: list[tuple[int, str, str, int]]  # (box, giver, taker, t)
    on_belt: list[tuple[str, int, int]]  # (belt, box, t)
    collisions: list[tuple[str, int, float, str, int, float]]  # (robot, link, frac) x 2
    beta_v: float = 1.0
    beta_a: float = 0.1
    margin: float = 1e-3

    def __post_init__(self):
        self.arm_index = {a.name: k for k, a in enumerate(self.arms)}
        self.belt_index = {b.name: k for k, b in enumerate(self.belts)}
        off = 0
        self.arm_offset = []
        for _ in self.arms:
            self.arm_offset.append(off)
            off += 3 * (self.n + 1)
        self.belt_offset = []
        for b in self.belts:
            self.belt_offset.append(off)
            off += 2 + len(b.boxes)
        self.n_vars = off
        for ev in self.pick + self.place + self.hand:
            if not 0 <= ev[-1] <= self.n:
                raise ValueError(f"event step {ev[-1]} outside 0..{self.n}")

    def arm_joints(self, x, name) -> np.ndarray:
        o = self.arm_offset[self.arm_index[name]]
        return np.asarray(x)[o:o + 3 * (self.n + 1)].reshape(self.n + 1, 3)

    def belt_state(self, x, name):
        k = self.belt_index[name]
        o = self.belt_offset[k]
        b = self.belts[k]
        return x[o], x[o + 1], {i: x[o + 2 + j] for j, i in enumerate(b.boxes)}

    def is_arm(self, name) -> bool:
        return name in self.arm_index

    def initial_guess(self) -> np.ndarray:
        return _initial_guess(self)

    def arm_conflicts(self) -> list[str]:
        """Arms asked to serve two different boxes at the same step."""
        seen: dict[tuple[str, int], set[int]] = {}
        for box, robot, _pose, t in self.pick + self.place:
            seen.setdefault((robot, t), set()).add(box)
        for box, r1, r2, t in self.hand:
            for r in (r1, r2):
                if self.is_arm(r):
                    seen.setdefault((r, t), set()).add(box)
        return [f"{r} holds boxes {', '.join(str(b + 1) for b in sorted(bs))} at t={t}"
                for (r, t), bs in sorted(seen.items()) if len(bs) > 1]


# --- residuals -------------------------------------------------------------------

class _Rows:
    """Accumulates residual blocks with their sparse Jacobians."""

    def __init__(self, n_vars):
        self.n_vars = n_vars
        self.vals, self.rows, self.cols, self.data, self.names = [], [], [], [], []
        self.count = 0

    def add(self, value, cols, jac, name):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        jac = np.asarray(jac, dtype=float).reshape(value.size, -1)
        cols = np.asarray(cols, dtype=np.int64)
        for k in range(value.size):
            self.rows.append(np.full(cols.size, self.count + k))
            self.cols.append(cols)
            self.data.append(jac[k])
        self.vals.append(value)
        self.names += [name] * value.size
        self.count += value.size

    def add_block(self, values, rows_local, cols, data, names):
        """Vectorized add: ``rows_local`` index into ``values``."""
        self.vals.append(np.asarray(values, dtype=float))
        self.rows.append(np.asarray(rows_local, dtype=np.int64) + self.count)
        self.cols.append(np.asarray(cols, dtype=np.int64))
        self.data.append(np.asarray(data, dtype=float))
        self.names += names
        self.count += len(values)

    def build(self, with_jac=True):
        r = np.concatenate(self.vals) if self.vals else np.zeros(0)
        if not with_jac:
            return r, None
        J = sp.csr_matrix((np.concatenate(self.data) if self.data else np.zeros(0),
                           (np.concatenate(self.rows) if self.rows else np.zeros(0, int),
                            np.concatenate(self.cols) if self.cols else np.zeros(0, int))),
                          shape=(self.count, self.n_vars))
        return r, J


def _arm_cols(p: MotionProblem, name: str, t: int) -> np.ndarray:
    o = p.arm_offset[p.arm_index[name]]
    return o + 3 * t + np.arange(3)


def _effector(p: MotionProblem, x, name, box, t):
    """(position, jac cols, jac (2, k), heading or None, heading cols)."""
    if p.is_arm(name):
        arm = p.arms[p.arm_index[name]]
        q = p.arm_joints(x, name)[t]
        pos, jac = arm.chain_point(q[None, :], 2, 1.0)
        return pos[0], _arm_cols(p, name, t), jac[0], float(np.sum(q)) + arm.yaw
    k = p.belt_index[name]
    b = p.belts[k]
    o = p.belt_offset[k]
    j = b.boxes.index(box)
    s = x[o] + x[o + 1] * t + x[o + 2 + j]
    u = b.axis
    cols = np.array([o, o + 1, o + 2 + j])
    jac = np.stack([u, u * t, u], axis=1)
    return b.mid + s * u, cols, jac, None


def _objective_rows(p: MotionProblem, x, rows: _Rows):
    if p.n == 0:
        return
    sv, sa = math.sqrt(p.beta_v), math.sqrt(p.beta_a)
    for arm in p.arms:
        q = p.arm_joints(x, arm.name)
        o = p.arm_offset[p.arm_index[arm.name]]
        idx = o + np.arange(3 * (p.n + 1)).reshape(p.n + 1, 3)
        vel = sv * (q[1:] - q[:-1]).ravel()
        m = vel.size
        r_local = np.repeat(np.arange(m), 2)
        cols = np.stack([idx[1:].ravel(), idx[:-1].ravel()], axis=1).ravel()
        data = np.tile([sv, -sv], m)
        rows.add_block(vel, r_local, cols, data, ["velocity"] * m)
        if p.n >= 2:
            acc = sa * (q[2:] - 2 * q[1:-1] + q[:-2]).ravel()
            m = acc.size
            r_local = np.repeat(np.arange(m), 3)
            cols = np.stack([idx[2:].ravel(), idx[1:-1].ravel(), idx[:-2].ravel()], axis=1).ravel()
            data = np.tile([sa, -2 * sa, sa], m)
            rows.add_block(acc, r_local, cols, data, ["acceleration"] * m)


def _equality_rows(p: MotionProblem, x, rows: _Rows):
    for kind, events in (("pick", p.pick), ("place", p.place)):
        for box, robot, pose, t in events:
            pos, cols, jac, heading = _effector(p, x, robot, box, t)
            name = f"{kind} box{box + 1} {robot} t={t}"
            rows.add(pos - (pose.x, pose.y), cols, jac, name)
            rows.add(_wrap(heading - pose.heading), cols, np.ones(3), name)
    for box, r1, r2, t in p.hand:
        p1, c1, j1, h1 = _effector(p, x, r1, box, t)
        p2, c2, j2, h2 = _effector(p, x, r2, box, t)
        name = f"hand box{box + 1} {r1}->{r2} t={t}"
        rows.add(p1 - p2, np.concatenate([c1, c2]), np.hstack([j1, -j2]), name)
        if h1 is not None and h2 is not None:
            rows.add(_wrap(h1 - h2 - np.pi), np.concatenate([c1, c2]),
                     np.concatenate([np.ones(3), -np.ones(3)]), name)


def _inequalities(p: MotionProblem, x):
    """Constraint values c (want c >= margin_k), Jacobian, per-row margins and names."""
    vals, rows_, cols_, data_, margins, names = [], [], [], [], [], []
    count = 0

    def push(c, cols, jac, margin, name):
        nonlocal count
        vals.append(c)
        rows_.append(np.full(len(cols), count))
        cols_.append(cols)
        data_.append(jac)
        margins.append(margin)
        names.append(name)
        count += 1

    # collision discs: vectorized over time for each disc pair
    T = p.n + 1
    cache = {}

    def disc(name, link, frac):
        key = (name, link, frac)
        if key not in cache:
            arm = p.arms[p.arm_index[name]]
            cache[key] = arm.chain_point(p.arm_joints(x, name), link, frac)
        return cache[key]

    for ra, la, fa, rb, lb, fb in p.collisions:
        pa, ja = disc(ra, la, fa)
        pb, jb = disc(rb, lb, fb)
        rad = (p.arms[p.arm_index[ra]].clearance + p.arms[p.arm_index[rb]].clearance) / 2
        diff = pa - pb
        d = np.maximum(np.linalg.norm(diff, axis=1), 1e-12)
        c = d - rad
        unit = diff / d[:, None]
        ga = np.einsum("ti,tij->tj", unit, ja)
        gb = -np.einsum("ti,tij->tj", unit, jb)
        same = ra == rb
        for t in np.flatnonzero(c < p.margin + 0.05):
            ca, cb = _arm_cols(p, ra, t), _arm_cols(p, rb, t)
            if same:
                cols, jac = ca, ga[t] + gb[t]
            else:
                cols, jac = np.concatenate([ca, cb]), np.concatenate([ga[t], gb[t]])
            push(c[t], cols, jac, p.margin, f"collision {ra}[{la}] {rb}[{lb}] t={t}")
    for belt, box, t in p.on_belt:
        k = p.belt_index[belt]
        b = p.belts[k]
        o = p.belt_offset[k]
        j = b.boxes.index(box)
        s = x[o] + x[o + 1] * t + x[o + 2 + j]
        cols = np.array([o, o + 1, o + 2 + j])
        g = np.array([1.0, t, 1.0])
        half = b.length / 2
        name = f"on-belt box{box + 1} {belt} t={t}"
        push(half - s, cols, -g, 0.0, name)
        push(s + half, cols, g, 0.0, name)
    for arm in p.arms:
        q = p.arm_joints(x, arm.name).ravel()
        o = p.arm_offset[p.arm_index[arm.name]]
        near = np.flatnonzero((q - arm.qmin < 0.05) | (arm.qmax - q < 0.05))
        for k in near:
            name = f"joint-limit {arm.name} t={k // 3} j={k % 3}"
            push(q[k] - arm.qmin, np.array([o + k]), np.array([1.0]), 0.0, name)
            push(arm.qmax - q[k], np.array([o + k]), np.array([-1.0]), 0.0, name)
    c = np.array(vals, dtype=float)
    if count:
        J = sp.csr_matrix((np.concatenate(data_), (np.concatenate(rows_), np.concatenate(cols_))),
                          shape=(count, p.n_vars))
    else:
        J = sp.csr_matrix((0, p.n_vars))
    return c, J, np.array(margins, dtype=float), names


def residuals(p: MotionProblem, x, mu_eq=1.0, mu_in=1.0, with_jac=True):
    """Stacked least-squares residual r(x) with F = |r|^2, and its Jacobian."""
    x = np.asarray(x, dtype=float)
    obj = _Rows(p.n_vars)
    _objective_rows(p, x, obj)
    eq = _Rows(p.n_vars)
    _equality_rows(p, x, eq)
    r_obj, J_obj = obj.build(with_jac)
    r_eq, J_eq = eq.build(with_jac)
    c, J_c, margin, _ = _inequalities(p, x)
    v = np.maximum(0.0, margin - c)
    r_in = math.sqrt(mu_in) * v ** 1.5
    parts = [r_obj, math.sqrt(mu_eq) * r_eq, r_in]
    r = np.concatenate(parts)
    if not with_jac:
        return r, None
    scale = -1.5 * math.sqrt(mu_in) * np.sqrt(v)
    J_in = sp.diags(scale) @ J_c
    J = sp.vstack([J_obj, math.sqrt(mu_eq) * J_eq, J_in], format="csr")
    return r, J


def objective(p: MotionProblem, x) -> float:
    """Smoothness objective only (no penalties)."""
    rows = _Rows(p.n_vars)
    _objective_rows(p, np.asarray(x, dtype=float), rows)
    r, _ = rows.build(False)
    return float(r @ r)


def penalized(p: MotionProblem, x, mu_eq=1.0, mu_in=1.0) -> float:
    r, _ = residuals(p, x, mu_eq, mu_in, with_jac=False)
    return float(r @ r)


def gradient(p: MotionProblem, x, mu_eq=1.0, mu_in=1.0) -> np.ndarray:
    r, J = residuals(p, x, mu_eq, mu_in)
    return 2.0 * (J.T @ r)


def constraint_violations(p: MotionProblem, x) -> tuple[float, str | None]:
    """Largest raw violation over all constraints and the name of that constraint."""
    x = np.asarray(x, dtype=float)
    eq = _Rows(p.n_vars)
    _equality_rows(p, x, eq)
    r_eq, _ = eq.build(False)
    c, _, margin, names = _inequalities(p, x)
    worst, which = 0.0, None
    if r_eq.size:
        k = int(np.argmax(np.abs(r_eq)))
        worst, which = float(abs(r_eq[k])), eq.names[k]
    if c.size:
        v = np.maximum(0.0, margin - c)
        k = int(np.argmax(v))
        if v[k] > worst:
            worst, which = float(v[k]), names[k]
    return worst, which


# --- solver -----------------------------------------------------------------------

@dataclass(frozen=True)
class MotionParams:
    tol: float = 1e-3
    mu0: float = 10.0
    mu_factor: float = 10.0
    max_rounds: int = 8
    max_iter: int = 200
    step_tol: float = 1e-8
    max_halvings: int = 30
    armijo: float = 1e-4
    damping: float = 1e-9


@dataclass
class Trajectories:
    problem: MotionProblem
    x: np.ndarray
    objective: float
    max_residual: float
    worst: str | None
    history: list[tuple[int, float]]  # (round, penalized objective) per accepted step
    iterations: int

    def joints(self, name) -> np.ndarray:
        return self.problem.arm_joints(self.x, name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["robot", "step", "q1", "q2", "q3"])
        for arm in self.problem.arms:
            for t, q in enumerate(self.joints(arm.name)):
                w.writerow([arm.name, t] + [f"{v:.9f}" for v in q])
        # belts: prismatic value, grasp offset and box number, one row per (box, step)
        for b in self.problem.belts:
            p0, v, grasp = self.problem.belt_state(self.x, b.name)
            for box, g in grasp.items():
                for t in range(self.problem.n + 1):
                    w.writerow([b.name, t, f"{p0 + v * t:.9f}", f"{g:.9f}", box + 1])
        return buf.getvalue()


def _gn_step(r, J, damping):
    H = (J.T @ J).tocsc()
    g = J.T @ r
    n = H.shape[0]
    lam = damping * max(1.0, float(H.diagonal().max(initial=0.0)))
    try:
        return splu(H + lam * sp.identity(n, format="csc")).solve(-g), g
    except RuntimeError:
        return np.linalg.lstsq(J.toarray(), -r, rcond=None)[0], g


def solve_trajectories(p: MotionProblem, params: MotionParams | None = None, x0=None,
                       raise_on_failure: bool = True) -> Trajectories:
    params = params or MotionParams()
    clash = p.arm_conflicts()
    if clash and raise_on_failure:
        raise MotionError(clash[0], math.inf)
    x = p.initial_guess() if x0 is None else np.array(x0, dtype=float)
    mu = params.mu0
    history: list[tuple[int, float]] = []
    iters = 0
    worst, which = constraint_violations(p, x)
    for rnd in range(params.max_rounds):
        r, J = residuals(p, x, mu, mu)
        F = float(r @ r)
        history.append((rnd, F))
        for _ in range(params.max_iter):
            iters += 1
            step, g = _gn_step(r, J, params.damping)
            slope = 2.0 * float(g @ step)
            if slope >= 0:
                break
            alpha, accepted = 1.0, False
            for _h in range(params.max_halvings):
                xn = x + alpha * step
                rn, _ = residuals(p, xn, mu, mu, with_jac=False)
                Fn = float(rn @ rn)
                if Fn <= F + params.armijo * alpha * slope:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break
            x = xn
            moved = alpha * float(np.linalg.norm(step))
            F_old, F = F, Fn
            history.append((rnd, F))
            r, J = residuals(p, x, mu, mu)
            if moved < params.step_tol or F_old - F <= 1e-14 * max(1.0, F_old):
                break
        worst, which = constraint_violations(p, x)
        log.debug("round %d mu=%g F=%.6g worst=%.3e (%s)", rnd, mu, F, worst, which)
        if worst < params.tol:
            break
        mu *= params.mu_factor
    result = Trajectories(p, x, objective(p, x), worst, which, history, iters)
    if worst >= params.tol and raise_on_failure:
        raise MotionError(which, worst)
    return result


# --- problem construction ------------------------------------------------------------

def _radial(base: Point, target: Point) -> float:
    return math.atan2(target[1] - base[1], target[0] - base[0])


def build_motion_problem(schedule: Schedule, layout: Layout, scene: Scene,
                         steps_per_dt: int = 10, beta_v: float = 1.0, beta_a: float = 0.1,
                         margin: float = 1e-3) -> MotionProblem:
    """Events, collision pairs and on-belt limits for replaying ``schedule``."""
    K = int(steps_per_dt)
    dt = schedule.dt

    def step(tau):
        return int(round(tau / dt * K))

    used = sorted({r for seq in schedule.sequences for r in seq})

    def spot(label):
        el = layout.elements[label]
        return el.point if el.kind == ARM else tuple((np.asarray(el.point) + el.end) / 2)

    targets: dict[str, list] = {label: [] for label in used}
    for i, seq in enumerate(schedule.sequences):
        if seq:
            targets[seq[0]].append(scene.input)
            targets[seq[-1]].append(scene.outputs[i].pos)
        for a, b in zip(seq, seq[1:]):
            targets[a].append(spot(b))
            targets[b].append(spot(a))
    arms, belts = [], []
    for label in used:
        el = layout.elements[label]
        if el.kind == ARM:
            rt = scene.robot(el.type)
            arms.append(PlanarArm.for_robot(label, el.point, rt.reach_min, rt.reach_max,
                                            rt.clearance, _mount_yaw(el.point, targets[label])))
        elif el.kind == BELT:
            belts.append(BeltTrack(label, el.point, el.end))
    belt_of = {b.name: b for b in belts}
    arm_of = {a.name: a for a in arms}
    pick, place, hand, on_belt = [], [], [], []
    for i, seq in enumerate(schedule.sequences):
        if not seq:
            continue
        tasks = schedule.tasks(i)
        out = scene.outputs[i].pos
        first, last = seq[0], seq[-1]
        if first not in arm_of or last not in arm_of:
            raise ValueError(f"box {i + 1}: picking and placing must be done by arms")
        pick.append((i, first, Pose(*scene.input, _radial(arm_of[first].base, scene.input)),
                     step(tasks[0].start)))
        place.append((i, last, Pose(*out, _radial(arm_of[last].base, out)), step(tasks[-1].end)))
        for a, b in zip(tasks, tasks[1:]):
            hand.append((i, a.robot, b.robot, step(a.end)))
        for tk in tasks:
            if tk.robot in belt_of:
                if i not in belt_of[tk.robot].boxes:
                    belt_of[tk.robot].boxes.append(i)
                on_belt += [(tk.robot, i, t) for t in range(step(tk.start), step(tk.end) + 1)]
    n = step(schedule.makespan)
    collisions = []
    for a in arms:
        for fa in DISC_FRACTIONS:
            for fb in DISC_FRACTIONS:
                collisions.append((a.name, 0, fa, a.name, 2, fb))
    for ka, a in enumerate(arms):
        for b in arms[ka + 1:]:
            if math.dist(a.base, b.base) > a.reach + b.reach:
                continue
            for la in (0, 1):
                for lb in (0, 1):
                    for fa in DISC_FRACTIONS:
                        for fb in DISC_FRACTIONS:
                            collisions.append((a.name, la, fa, b.name, lb, fb))
    return MotionProblem(n, arms, belts, pick, place, hand, on_belt, collisions,
                         beta_v, beta_a, margin)


def _handover_pose(a: PlanarArm, b: PlanarArm) -> tuple[np.ndarray, float]:
    """A meeting point inside both annuli and the giver's heading there."""
    ba, bb = np.asarray(a.base), np.asarray(b.base)
    d = float(np.linalg.norm(bb - ba))
    ra = (a.lengths[2] + a.reach) / 2
    rb = (b.lengths[2] + b.reach) / 2
    if d < 1e-12:
        p = ba + np.array([ra, 0.0])
    elif abs(ra - rb) <= d <= ra + rb:
        # circle intersection, pick the left-hand point
        along = (d * d + ra * ra - rb * rb) / (2 * d)
        h = math.sqrt(max(ra * ra - along * along, 0.0))
        u = (bb - ba) / d
        p = ba + along * u + h * np.array([-u[1], u[0]])
    else:
        u = (bb - ba) / d
        p = ba + u * min(max(d * ra / (ra + rb), a.lengths[2]), a.reach)
    ua = p - ba
    ub = p - bb
    ua = ua / max(np.linalg.norm(ua), 1e-12)
    ub = ub / max(np.linalg.norm(ub), 1e-12)
    v = ua - ub
    heading = math.atan2(v[1], v[0]) if np.linalg.norm(v) > 1e-9 else math.atan2(ua[1], ua[0])
    return p, heading


def _pick_branches(arm: PlanarArm, poses) -> np.ndarray:
    """IK per keyframe, choosing elbow branches for the smoothest joint path."""
    options = [[arm.inverse(*pose, elbow=e) for e in (1, -1)] for pose in poses]
    # dynamic programming over the two branches per keyframe
    cost = [float(np.max(np.abs(o))) for o in options[0]]
    back = []
    for prev, cur in zip(options, options[1:]):
        new, ptr = [], []
        for c in cur:
            steps = [cost[k] + float(np.sum((c - prev[k]) ** 2)) for k in range(2)]
            k = int(np.argmin(steps))
            new.append(steps[k])
            ptr.append(k)
        cost, back = new, back + [ptr]
    k = int(np.argmin(cost))
    chosen = [k]
    for ptr in reversed(back):
        k = ptr[k]
        chosen.append(k)
    chosen.reverse()
    return np.array([options[i][k] for i, k in enumerate(chosen)])


def _mount_yaw(base, targets) -> float:
    """Mounting heading that puts the first joint's +-pi seam in the widest
    angular gap between the directions an arm has to work in."""
    angles = sorted({round(math.atan2(t[1] - base[1], t[0] - base[0]), 12) for t in targets
                     if math.dist(t, base) > 1e-12})
    if not angles:
        return 0.0
    gaps = [(angles[(k + 1) % len(angles)] - a) % (2 * math.pi) or 2 * math.pi
            for k, a in enumerate(angles)]
    k = int(np.argmax(gaps))
    seam = angles[k] + gaps[k] / 2
    return float(_wrap(seam + math.pi))


def _belt_plan(p: MotionProblem) -> dict[str, tuple[float, float, dict[int, float]]]:
    """Initial belt state (p0, speed, grasp per box) so that each box enters and
    leaves at fixed positions: +-L/4 next to arms, +-L/2 at junctions."""
    spans: dict[tuple[str, int], list] = {}
    for box, r1, r2, t in p.hand:
        if r1 in p.belt_index:
            spans.setdefault((r1, box), [None, None])[1] = (t, 0.5 if r2 in p.belt_index else 0.25)
        if r2 in p.belt_index:
            spans.setdefault((r2, box), [None, None])[0] = (t, -0.5 if r1 in p.belt_index else -0.25)
    plan = {}
    for b in p.belts:
        speed, grasp = None, {}
        for box in b.boxes:
            steps = [t for bb, i, t in p.on_belt if bb == b.name and i == box]
            enter, leave = spans.get((b.name, box), [None, None])
            enter = enter or (min(steps), -0.25)
            leave = leave or (max(steps), 0.25)
            if speed is None:
                speed = (leave[1] - enter[1]) * b.length / max(leave[0] - enter[0], 1)
            grasp[box] = enter[1] * b.length - speed * enter[0]
        plan[b.name] = (0.0, speed or 0.0, grasp)
    return plan


def _initial_guess(p: MotionProblem) -> np.ndarray:
    x = np.zeros(p.n_vars)
    keyframes: dict[str, list[tuple[int, tuple]]] = {a.name: [] for a in p.arms}
    arm_of = {a.name: a for a in p.arms}
    plan = _belt_plan(p)
    for k, b in enumerate(p.belts):
        o = p.belt_offset[k]
        p0, speed, grasp = plan[b.name]
        x[o], x[o + 1] = p0, speed
        for j, box in enumerate(b.boxes):
            x[o + 2 + j] = grasp[box]
    for _box, robot, pose, t in p.pick + p.place:
        keyframes[robot].append((t, (pose.x, pose.y, pose.heading)))
    for box, r1, r2, t in p.hand:
        if r1 in arm_of and r2 in arm_of:
            pt, h = _handover_pose(arm_of[r1], arm_of[r2])
            keyframes[r1].append((t, (pt[0], pt[1], h)))
            keyframes[r2].append((t, (pt[0], pt[1], h + math.pi)))
            continue
        for arm_name, belt_name in ((r1, r2), (r2, r1)):
            if arm_name in arm_of and belt_name in p.belt_index:
                pos, _, _, _ = _effector(p, x, belt_name, box, t)
                h = _radial(arm_of[arm_name].base, tuple(pos))
                keyframes[arm_name].append((t, (pos[0], pos[1], h)))
    for arm in p.arms:
        frames = sorted(keyframes[arm.name], key=lambda kv: kv[0])
        q = np.zeros((p.n + 1, 3))
        if frames:
            ts = np.array([t for t, _ in frames], dtype=float)
            qs = _pick_branches(arm, [pose for _, pose in frames])
            for j in range(3):
                q[:, j] = np.interp(np.arange(p.n + 1), ts, qs[:, j])
        o = p.arm_offset[p.arm_index[arm.name]]
        x[o:o + 3 * (p.n + 1)] = q.ravel()
    return x
