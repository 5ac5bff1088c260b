"""Best-first branch-and-bound over the bounded simplex."""
from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .model import EQ, GE, LE, MilpModel
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, BoundedSimplex, SimplexTimeout

log = logging.getLogger(__name__)

TIMEOUT = "timeout"
INT_TOL = 1e-6


@dataclass(frozen=True)
class SolverParams:
    time_limit_s: float = 300.0
    abs_gap: float = 1e-6
    int_tol: float = INT_TOL
    node_limit: int | None = None


@dataclass
class MilpSolution:
    x: np.ndarray | None
    objective: float
    status: str
    nodes: int = 0
    bound: float = -math.inf
    incumbents: list[tuple[int, float]] = field(default_factory=list)
    trace: list[tuple[int, int, float]] | None = None
    elapsed_s: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


# --- presolve ----------------------------------------------------------------

@dataclass
class _Reduced:
    cols: np.ndarray
    rows: np.ndarray
    x_fixed: np.ndarray
    dual_fixed: list[int]
    c: np.ndarray
    A: sp.csr_matrix
    sense: list[str]
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    is_int: np.ndarray
    offset: float
    infeasible: bool = False


def presolve(model: MilpModel, tol: float = 1e-9) -> _Reduced:
    """Drop fixed columns, dominated zero-cost columns, singleton rows and implied rows."""
    A = model.A.tocsr().astype(float)
    m, n = A.shape
    A_csc = A.tocsc()
    lb, ub = model.lb.astype(float).copy(), model.ub.astype(float).copy()
    is_int = model.is_int
    sense = np.array(model.sense, dtype=object)
    is_le, is_ge, is_eq = sense == LE, sense == GE, sense == EQ
    rhs = model.rhs.astype(float).copy()
    col_on = np.ones(n, dtype=bool)
    row_on = np.ones(m, dtype=bool)
    x_fixed = np.zeros(n)
    dual_fixed: list[int] = []
    nz = A.copy()
    nz.data[:] = 1.0
    Apos, Aneg = A.maximum(0), A.minimum(0)

    def fix(cols, vals):
        nonlocal rhs
        cols = np.asarray(cols, dtype=np.int64)
        if cols.size == 0:
            return
        vals = np.asarray(vals, dtype=float)
        x_fixed[cols] = vals
        col_on[cols] = False
        rhs = rhs - A_csc[:, cols] @ vals

    def reduced(infeasible=False):
        cols, rows = np.flatnonzero(col_on), np.flatnonzero(row_on)
        sub = A[rows][:, cols].tocsr()
        return _Reduced(cols, rows, x_fixed, dual_fixed, model.c[cols], sub,
                        [model.sense[i] for i in rows], rhs[rows], lb[cols], ub[cols],
                        is_int[cols], float(model.c @ x_fixed), infeasible)

    for _ in range(50):
        changed = False
        if np.any(lb > ub + tol):
            return reduced(True)
        # fixed columns
        fx = np.flatnonzero(col_on & (ub - lb <= tol))
        if fx.size:
            fix(fx, lb[fx])
            changed = True
        cmask = col_on.astype(float)
        row_nnz = nz @ cmask
        # singleton rows become bounds
        for i in np.flatnonzero(row_on & (row_nnz == 1)):
            lo_, hi_ = A.indptr[i], A.indptr[i + 1]
            js, vs = A.indices[lo_:hi_], A.data[lo_:hi_]
            k = np.flatnonzero(col_on[js])[0]
            j, a = js[k], vs[k]
            bound = rhs[i] / a
            if is_eq[i] or (is_le[i] and a > 0) or (is_ge[i] and a < 0):
                ub[j] = min(ub[j], bound)
            if is_eq[i] or (is_le[i] and a < 0) or (is_ge[i] and a > 0):
                lb[j] = max(lb[j], bound)
            if is_int[j]:
                ub[j] = math.floor(ub[j] + 1e-9)
                lb[j] = math.ceil(lb[j] - 1e-9)
            row_on[i] = False
            changed = True
        # empty / implied rows
        lbm = np.where(col_on, lb, 0.0)
        ubm = np.where(col_on, ub, 0.0)
        min_act = Apos @ lbm + Aneg @ ubm
        max_act = Apos @ ubm + Aneg @ lbm
        bad = row_on & (((is_le | is_eq) & (min_act > rhs + 1e-7)) |
                        ((is_ge | is_eq) & (max_act < rhs - 1e-7)))
        if np.any(bad):
            return reduced(True)
        implied = row_on & ((is_le & (max_act <= rhs + tol)) | (is_ge & (min_act >= rhs - tol)) |
                            (is_eq & (np.abs(max_act - rhs) <= tol) & (np.abs(min_act - rhs) <= tol)))
        if np.any(implied):
            row_on[implied] = False
            changed = True
        # dominated columns: moving toward one bound never hurts any row or the objective
        rmask = row_on.astype(float)
        le_on, ge_on, eq_on = rmask * is_le, rmask * is_ge, rmask * is_eq
        in_eq = (nz.T @ eq_on) > 0
        pos_le, neg_le = (Apos.T @ le_on) > 0, (Aneg.T @ le_on) < 0
        pos_ge, neg_ge = (Apos.T @ ge_on) > 0, (Aneg.T @ ge_on) < 0
        down_ok = col_on & ~in_eq & ~neg_le & ~pos_ge & (model.c >= 0) & np.isfinite(lb)
        up_ok = col_on & ~in_eq & ~pos_le & ~neg_ge & (model.c <= 0) & np.isfinite(ub) & ~down_ok
        dn, up = np.flatnonzero(down_ok), np.flatnonzero(up_ok)
        if dn.size or up.size:
            dual_fixed.extend(dn.tolist())
            dual_fixed.extend(up.tolist())
            fix(dn, lb[dn])
            fix(up, ub[up])
            changed = True
        if not changed:
            break
    return reduced()


def _postsolve(model: MilpModel, pre: _Reduced, x_red: np.ndarray) -> np.ndarray:
    x = pre.x_fixed.copy()
    x[pre.cols] = x_red
    # Zero-cost dominated columns were pinned to whichever bound was safe; move
    # them back to the other bound when every row still holds.
    A = model.A.tocsc()
    act = model.A @ x
    sense = model.sense
    for j in reversed(pre.dual_fixed):
        if model.c[j] != 0:
            continue
        other = model.lb[j] if x[j] == model.ub[j] else model.ub[j]
        if other == x[j] or not np.isfinite(other):
            continue
        lo_, hi_ = A.indptr[j], A.indptr[j + 1]
        rows, vals = A.indices[lo_:hi_], A.data[lo_:hi_]
        new = act[rows] + vals * (other - x[j])
        ok = True
        for i, v in zip(rows, new):
            s = sense[i]
            if (s == LE and v > model.rhs[i] + 1e-9) or (s == GE and v < model.rhs[i] - 1e-9) \
                    or (s == EQ and abs(v - model.rhs[i]) > 1e-9):
                ok = False
                break
        if ok:
            act[rows] = new
            x[j] = other
    return x


# --- branch and bound ----------------------------------------------------------

@dataclass
class _Node:
    changes: tuple  # ((var, lo, hi), ...) relative to the root bounds
    depth: int
    warm: tuple | None
    parent: int


def _most_fractional(x, int_idx, tol):
    v = x[int_idx]
    frac = np.abs(v - np.round(v))
    cand = frac > tol
    if not np.any(cand):
        return -1
    score = np.round(np.minimum(v - np.floor(v), np.ceil(v) - v), 12)
    score[~cand] = -1.0
    return int(int_idx[int(np.argmax(score))])


def solve_milp(model: MilpModel, params: SolverParams | None = None, *, trace: bool = False,
               **overrides) -> MilpSolution:
    params = params or SolverParams()
    if overrides:
        params = SolverParams(**{**params.__dict__, **overrides})
    start = time.monotonic()
    deadline = start + params.time_limit_s
    pre = presolve(model)
    if pre.infeasible:
        return MilpSolution(None, math.inf, INFEASIBLE, 0, elapsed_s=time.monotonic() - start)
    n = pre.cols.size
    tr = [] if trace else None

    def finish(status, x_red, obj, nodes, bound, hist):
        x = None if x_red is None else _postsolve(model, pre, x_red)
        if x is not None:
            x[model.is_int] = np.round(x[model.is_int])
            obj = float(model.c @ x)
        return MilpSolution(x, obj, status, nodes, bound, hist, tr, time.monotonic() - start)

    if n == 0:
        return finish(OPTIMAL, np.zeros(0), pre.offset, 1, pre.offset, [(1, pre.offset)])

    lp = BoundedSimplex(pre.c, pre.A, pre.sense, pre.rhs, pre.lb, pre.ub)
    int_idx = np.flatnonzero(pre.is_int)
    heap: list = []
    seq = 0
    heapq.heappush(heap, (-math.inf, 0, seq, _Node((), 0, None, -1)))
    inc_x, inc_obj = None, math.inf
    history: list[tuple[int, float]] = []
    nodes = 0
    while heap:
        key, negdepth, _, node = heap[0]
        if key >= inc_obj - pre.offset - params.abs_gap:
            heap.clear()
            break
        if time.monotonic() > deadline or (params.node_limit and nodes >= params.node_limit):
            return finish(TIMEOUT, inc_x, inc_obj, nodes, key + pre.offset, history)
        heapq.heappop(heap)
        nodes += 1
        lo, hi = pre.lb.copy(), pre.ub.copy()
        for j, a, b in node.changes:
            lo[j], hi[j] = a, b
        try:
            sol = lp.solve(lo, hi, warm=node.warm, deadline=deadline)
        except SimplexTimeout:
            return finish(TIMEOUT, inc_x, inc_obj, nodes, key + pre.offset, history)
        if sol.status == UNBOUNDED:
            raise RuntimeError("LP relaxation unbounded; every column must be bounded")
        if tr is not None:
            tr.append((nodes, node.parent, sol.objective + pre.offset))
        if sol.status == INFEASIBLE or sol.objective + pre.offset >= inc_obj - params.abs_gap:
            continue
        j = _most_fractional(sol.x, int_idx, params.int_tol)
        if j < 0:
            inc_x, inc_obj = sol.x, sol.objective + pre.offset
            history.append((nodes, inc_obj))
            log.debug("node %d: incumbent %.9g", nodes, inc_obj)
            continue
        v = sol.x[j]
        bound = round(sol.objective, 9)
        for lo_j, hi_j in ((math.ceil(v), hi[j]), (lo[j], math.floor(v))):
            seq += 1
            child = _Node(node.changes + ((j, lo_j, hi_j),), node.depth + 1, sol.warm, nodes)
            heapq.heappush(heap, (bound, -child.depth, seq, child))
    if inc_x is None:
        return finish(INFEASIBLE, None, math.inf, nodes, math.inf, history)
    return finish(OPTIMAL, inc_x, inc_obj, nodes, inc_obj, history)
