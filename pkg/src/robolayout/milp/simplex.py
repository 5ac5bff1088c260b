"""Bounded-variable revised simplex (primal and dual) on a sparse LU basis.

The basis inverse is a SuperLU factorization followed by a product-form eta
file; it is refactorized every ``MAX_ETAS`` pivots. Every column carries
finite bounds in phase 2, which lets the dual simplex restore dual
feasibility by bound flipping alone. That is what makes branch-and-bound
warm starts cheap.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .. import kernels
from .model import EQ, GE, LE, MilpModel

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"

MAX_ETAS = 48
FEAS_TOL = 1e-9
DUAL_TOL = 1e-9
PIV_TOL = 1e-9
PHASE1_TOL = 1e-7
PERTURB = 1e-6

AT_LOWER, AT_UPPER, BASIC = 0, 1, 2


class SimplexTimeout(Exception):
    pass


class _SingularBasis(Exception):
    pass


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: str
    iterations: int = 0
    warm: tuple | None = field(default=None, repr=False)


class _Factor:
    def __init__(self, A_csc: sp.csc_matrix, basis: np.ndarray):
        self.A = A_csc
        self.m = A_csc.shape[0]
        self.basis = basis
        self.rows = np.zeros(MAX_ETAS, dtype=np.int64)
        self.etas = np.zeros((MAX_ETAS, self.m))
        self.k = 0
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis].tocsc()
        try:
            self.lu = splu(B, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise _SingularBasis(str(exc)) from None
        self.k = 0

    def ftran(self, a):
        x = self.lu.solve(np.asarray(a, dtype=float))
        if self.k:
            kernels.eta_ftran(x, self.rows, self.etas, self.k)
        return x

    def btran(self, c):
        z = np.array(c, dtype=float)
        if self.k:
            kernels.eta_btran(z, self.rows, self.etas, self.k)
        return self.lu.solve(z, trans="T")

    def update(self, r, alpha):
        """``basis[r]`` has already been replaced; ``alpha`` is its old-basis ftran."""
        if self.k == MAX_ETAS:
            self.refactor()
            return
        self.rows[self.k] = r
        self.etas[self.k] = alpha
        self.k += 1


class BoundedSimplex:
    """Reusable solver for one constraint matrix under varying column bounds."""

    def __init__(self, c, A, sense, rhs, lb, ub):
        A = sp.csr_matrix(A, dtype=float)
        m, n = A.shape
        self.m, self.n = m, n
        self.c = np.asarray(c, dtype=float)
        self.rhs = np.asarray(rhs, dtype=float)
        lb = np.asarray(lb, dtype=float)
        ub = np.asarray(ub, dtype=float)
        if np.any(np.isinf(lb) & np.isinf(ub)):
            raise ValueError("free columns are not supported; give every column a finite bound")
        # Implied activity range of each row under the root bounds bounds the slacks.
        Ap, An = A.maximum(0), A.minimum(0)
        with np.errstate(invalid="ignore"):
            min_act = Ap @ np.nan_to_num(lb, neginf=-1e300) + An @ np.nan_to_num(ub, posinf=1e300)
            max_act = Ap @ np.nan_to_num(ub, posinf=1e300) + An @ np.nan_to_num(lb, neginf=-1e300)
        slack_rows, slack_sign, slack_ub = [], [], []
        for i, s in enumerate(sense):
            if s == LE:
                slack_rows.append(i)
                slack_sign.append(1.0)
                span = self.rhs[i] - min_act[i]
            elif s == GE:
                slack_rows.append(i)
                slack_sign.append(-1.0)
                span = max_act[i] - self.rhs[i]
            elif s == EQ:
                continue
            else:
                raise ValueError(f"unknown row sense {s!r}")
            slack_ub.append(np.inf if span > 1e250 else max(span, 0.0))
        ns = len(slack_rows)
        S = sp.csc_matrix((slack_sign, (slack_rows, np.arange(ns))), shape=(m, ns))
        self.slack_of_row = np.full(m, -1, dtype=np.int64)
        self.slack_of_row[slack_rows] = n + np.arange(ns)
        self.n_slack = ns
        self.art0 = n + ns
        self.N = n + ns + m
        self.A = sp.hstack([A.tocsc(), S, sp.identity(m, format="csc")], format="csc")
        self.AT = self.A.T.tocsr()
        self.base_lb = np.concatenate([lb, np.zeros(ns), np.zeros(m)])
        self.base_ub = np.concatenate([ub, np.array(slack_ub), np.zeros(m)])
        self.cost2 = np.concatenate([self.c, np.zeros(ns + m)])

    # -- helpers ---------------------------------------------------------
    def _nonbasic_values(self, status, lo, up):
        x = np.where(status == AT_UPPER, up, lo)
        x[status == BASIC] = 0.0
        return x

    def _basic_values(self, factor, x):
        r = self.rhs - self.A @ x
        return factor.ftran(r)

    # -- primal ----------------------------------------------------------
    def _primal(self, factor, basis, status, lo, up, cost, deadline, it0):
        m = self.m
        fixed = lo == up
        degenerate = 0
        bland_after = 10 * (m + self.N)
        it = it0
        while True:
            it += 1
            if deadline is not None and it % 32 == 0 and time.monotonic() > deadline:
                raise SimplexTimeout
            xn = self._nonbasic_values(status, lo, up)
            xb = self._basic_values(factor, xn)
            y = factor.btran(cost[basis])
            d = cost - self.AT @ y
            bland = degenerate > bland_after
            elig = ((status == AT_LOWER) & (d < -DUAL_TOL)) | ((status == AT_UPPER) & (d > DUAL_TOL))
            elig &= ~fixed
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                x = xn
                x[basis] = xb
                return OPTIMAL, x, it
            j = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            sigma = 1.0 if status[j] == AT_LOWER else -1.0
            alpha = factor.ftran(self._column(j))
            delta = -sigma * alpha
            r, t, to_upper = kernels.primal_ratio_test(
                xb, lo[basis], up[basis], delta, basis, FEAS_TOL, PIV_TOL, bland)
            span = up[j] - lo[j]
            if r < 0 and not np.isfinite(span):
                x = xn
                x[basis] = xb
                return UNBOUNDED, x, it
            if r < 0 or span <= t:
                status[j] = AT_UPPER if status[j] == AT_LOWER else AT_LOWER
                degenerate = 0
                continue
            degenerate = degenerate + 1 if t <= 1e-12 else 0
            leaving = basis[r]
            status[leaving] = AT_UPPER if to_upper else AT_LOWER
            basis[r] = j
            status[j] = BASIC
            factor.update(r, alpha)

    # -- dual ------------------------------------------------------------
    def _column(self, j):
        col = np.zeros(self.m)
        lo_, hi_ = self.A.indptr[j], self.A.indptr[j + 1]
        col[self.A.indices[lo_:hi_]] = self.A.data[lo_:hi_]
        return col

    def _duals(self, factor, basis, cost):
        y = factor.btran(cost[basis])
        d = cost - self.AT @ y
        d[basis] = 0.0
        return d

    def _dual(self, factor, basis, status, lo, up, cost, deadline, it0, max_iter):
        """Bounded dual simplex; ``None`` means "give up, fall back to primal".

        Leaving rows are priced by dual steepest edge. The weights start at 1,
        which is exact for the slack basis and a reference guess otherwise.
        """
        fixed = lo == up
        it = it0
        degenerate = 0
        weight = np.ones(self.m)
        bland_after = 10 * (self.m + self.N)
        d = self._duals(factor, basis, cost)
        xn = None
        while True:
            it += 1
            if it - it0 > max_iter:
                return None, it
            if deadline is not None and it % 32 == 0 and time.monotonic() > deadline:
                raise SimplexTimeout
            nb = status != BASIC
            flip_up = nb & (status == AT_LOWER) & (d < -DUAL_TOL) & ~fixed
            flip_dn = nb & (status == AT_UPPER) & (d > DUAL_TOL) & ~fixed
            if np.any(np.isinf(up[flip_up])) or np.any(np.isinf(lo[flip_dn])):
                return None, it
            flipped = np.any(flip_up) or np.any(flip_dn)
            status[flip_up] = AT_UPPER
            status[flip_dn] = AT_LOWER
            if xn is None or flipped:
                xn = self._nonbasic_values(status, lo, up)
                xb = self._basic_values(factor, xn)
            below = lo[basis] - xb
            above = xb - up[basis]
            viol = np.maximum(below, above)
            bad = np.flatnonzero(viol > FEAS_TOL)
            if bad.size == 0:
                x = self._nonbasic_values(status, lo, up)
                x[basis] = self._basic_values(factor, x)
                if np.any(np.maximum(lo[basis] - x[basis], x[basis] - up[basis]) > FEAS_TOL):
                    xn = None  # drift: start over from a fresh evaluation
                    d = self._duals(factor, basis, cost)
                    continue
                return OPTIMAL, it
            if degenerate > bland_after:
                r = int(bad[np.argmin(basis[bad])])
            else:
                r = int(bad[np.argmax(viol[bad] ** 2 / weight[bad])])
            increase = below[r] > 0
            e = np.zeros(self.m)
            e[r] = 1.0
            rho = factor.btran(e)
            arow = self.AT @ rho
            st = status.astype(np.int8)
            st[fixed & nb] = 3
            q = kernels.dual_ratio_test(d, arow, st, increase, PIV_TOL, DUAL_TOL)
            if q < 0:
                return INFEASIBLE, it
            alpha = factor.ftran(self._column(q))
            if abs(alpha[r]) < PIV_TOL:
                return None, it
            degenerate = degenerate + 1 if abs(d[q]) <= 1e-12 else 0
            tau = factor.ftran(rho)
            ratio = alpha / alpha[r]
            beta_r = float(rho @ rho)
            weight += ratio * (ratio * beta_r - 2.0 * tau)
            np.maximum(weight, 1e-8, out=weight)
            weight[r] = max(beta_r / alpha[r] ** 2, 1e-8)
            leaving = basis[r]
            target = lo[leaving] if increase else up[leaving]
            theta_d = d[q] / arow[q]
            d -= theta_d * arow
            theta_p = (xb[r] - target) / alpha[r]
            xq = xn[q] + theta_p
            xb -= theta_p * alpha
            xb[r] = xq
            xn[leaving] = target
            xn[q] = 0.0
            status[leaving] = AT_LOWER if increase else AT_UPPER
            basis[r] = q
            status[q] = BASIC
            factor.update(r, alpha)
            if factor.k == 0:
                d = self._duals(factor, basis, cost)
                xb = self._basic_values(factor, xn)
            else:
                d[basis] = 0.0
                d[leaving] = -theta_d

    # -- drivers ---------------------------------------------------------
    def _perturbed_cost(self):
        """Costs nudged by a tiny seeded amount to break dual degeneracy.

        Flow columns all cost zero, so without this the dual ratio test faces
        huge ties. The primal pass that follows restores the true costs.
        """
        rng = np.random.default_rng(0)
        c = self.cost2.copy()
        n = self.n
        c[:n] += PERTURB * (1.0 + np.abs(c[:n])) * rng.uniform(0.5, 1.0, n)
        return c

    def _cold(self, lo, up, deadline):
        # Every column is bounded, so the slack basis is dual feasible after
        # bound flips; the dual simplex copes far better with the heavy
        # degeneracy of flow models than primal phase 1/2 does.
        basis = np.where(self.slack_of_row >= 0, self.slack_of_row, self.art0 + np.arange(self.m))
        status = np.full(self.N, AT_LOWER, dtype=np.int8)
        status[basis] = BASIC
        try:
            factor = _Factor(self.A, basis)
            st, it = self._dual(factor, basis, status, lo, up, self._perturbed_cost(), deadline, 0,
                                max_iter=50 * (self.m + 100))
        except _SingularBasis:
            st = None
        if st == INFEASIBLE:
            return INFEASIBLE, np.zeros(self.N), it, None, None
        if st == OPTIMAL:
            st, x, it = self._primal(factor, basis, status, lo, up, self.cost2, deadline, it)
            return st, x, it, basis, status
        return self._two_phase(lo, up, deadline)

    def _two_phase(self, lo, up, deadline):
        m, n = self.m, self.n
        lo = lo.copy()
        up = up.copy()
        status = np.full(self.N, AT_LOWER, dtype=np.int8)
        status[:n][np.isinf(lo[:n])] = AT_UPPER
        xn = self._nonbasic_values(status, lo, up)
        resid = self.rhs - self.A[:, :n] @ xn[:n]
        basis = np.empty(m, dtype=np.int64)
        cost1 = np.zeros(self.N)
        for i in range(m):
            s = self.slack_of_row[i]
            if s >= 0:
                sign = self.A[i, s]
                val = resid[i] * sign
                if 0.0 <= val <= up[s]:
                    basis[i] = s
                    status[s] = BASIC
                    continue
            a = self.art0 + i
            basis[i] = a
            status[a] = BASIC
            if resid[i] >= 0:
                lo[a], up[a], cost1[a] = 0.0, np.inf, 1.0
            else:
                lo[a], up[a], cost1[a] = -np.inf, 0.0, -1.0
        factor = _Factor(self.A, basis)
        st, x, it = self._primal(factor, basis, status, lo, up, cost1, deadline, 0)
        infeas = float(cost1 @ x)
        if infeas > PHASE1_TOL * max(1.0, np.abs(self.rhs).max(initial=0.0)):
            return INFEASIBLE, x, it, None, None
        art = np.arange(self.art0, self.N)
        lo[art] = 0.0
        up[art] = 0.0
        status[art[status[art] != BASIC]] = AT_LOWER
        st, x, it = self._primal(factor, basis, status, lo, up, self.cost2, deadline, it)
        return st, x, it, basis, status

    def solve(self, lb=None, ub=None, warm=None, deadline=None) -> LpSolution:
        lo = self.base_lb.copy()
        up = self.base_ub.copy()
        if lb is not None:
            lo[: self.n] = lb
        if ub is not None:
            up[: self.n] = ub
        if np.any(lo > up + 1e-12):
            return LpSolution(np.clip(np.zeros(self.n), lo[: self.n], up[: self.n]),
                              np.inf, INFEASIBLE)
        result = None
        if warm is not None:
            result = self._warm(warm, lo, up, deadline)
        if result is None:
            try:
                st, x, it, basis, status = self._cold(lo, up, deadline)
            except _SingularBasis:
                raise RuntimeError("singular initial basis") from None
        else:
            st, x, it, basis, status = result
        xs = x[: self.n]
        if st == OPTIMAL:
            xs = np.clip(xs, lo[: self.n], up[: self.n])
            obj = float(self.c @ xs)
            warm_state = (basis.copy(), status.copy())
        elif st == INFEASIBLE:
            obj, warm_state = np.inf, None
        else:
            obj, warm_state = -np.inf, None
        return LpSolution(xs.copy(), obj, st, it, warm_state)

    def _warm(self, warm, lo, up, deadline):
        basis, status = warm[0].copy(), warm[1].copy()
        try:
            factor = _Factor(self.A, basis)
            st, it = self._dual(factor, basis, status, lo, up, self.cost2, deadline, 0,
                                max_iter=20 * (self.m + 10))
            if st is None:
                return None
            if st == INFEASIBLE:
                return INFEASIBLE, np.zeros(self.N), it, None, None
            st, x, it = self._primal(factor, basis, status, lo, up, self.cost2, deadline, it)
            return st, x, it, basis, status
        except _SingularBasis:
            return None


def solve_lp(model: MilpModel, deadline=None) -> LpSolution:
    """Solve the continuous relaxation of ``model``."""
    return BoundedSimplex(model.c, model.A, model.sense, model.rhs, model.lb, model.ub).solve(
        deadline=deadline)
