"""Pure numpy implementations of the hot loops.

Every function here has a drop-in twin in ``_kernels.pyx``; the two must
agree bit-for-bit on integer outputs and to rounding on float outputs.
"""
from __future__ import annotations

import numpy as np

INF = np.inf


def arm_pair_mask(xy, rmin, rmax, clear):
    """Handover feasibility between every ordered pair of arm placements.

    Pairs (i, i) are False. The predicate is symmetric.
    """
    dx = xy[:, None, 0] - xy[None, :, 0]
    dy = xy[:, None, 1] - xy[None, :, 1]
    d = np.hypot(dx, dy)
    ok = d >= clear[:, None] + clear[None, :] - 1e-12
    ok &= d <= rmax[:, None] + rmax[None, :] + 1e-12
    ok &= d >= rmin[:, None] - rmax[None, :] - 1e-12
    ok &= d >= rmin[None, :] - rmax[:, None] - 1e-12
    np.fill_diagonal(ok, False)
    return ok


def arm_segment_mask(xy, rmin, rmax, clear, seg_a, seg_b):
    """Arm i can hand over with belt j: annulus meets the segment, no base overlap."""
    ab = seg_b - seg_a
    len2 = np.einsum("ij,ij->i", ab, ab)
    ap = xy[:, None, :] - seg_a[None, :, :]
    t = np.clip(np.einsum("ijk,jk->ij", ap, ab) / len2[None, :], 0.0, 1.0)
    closest = seg_a[None, :, :] + t[..., None] * ab[None, :, :]
    dmin = np.linalg.norm(xy[:, None, :] - closest, axis=2)
    da = np.linalg.norm(xy[:, None, :] - seg_a[None, :, :], axis=2)
    db = np.linalg.norm(xy[:, None, :] - seg_b[None, :, :], axis=2)
    dmax = np.maximum(da, db)
    ok = dmin >= clear[:, None] - 1e-12
    ok &= dmin <= rmax[:, None] + 1e-12
    ok &= dmax >= rmin[:, None] - 1e-12
    return ok


def primal_ratio_test(x_b, lo_b, up_b, delta, basis, feas_tol, piv_tol, bland):
    """Two-pass (Harris) ratio test for a bounded basic solution moving along ``delta``.

    Returns ``(row, step, to_upper)``; row is -1 when nothing blocks.
    """
    dec = delta < -piv_tol
    inc = delta > piv_tol
    relaxed = np.full(delta.shape, INF)
    relaxed[dec] = (x_b[dec] - lo_b[dec] + feas_tol) / -delta[dec]
    with np.errstate(invalid="ignore"):
        relaxed[inc] = (up_b[inc] - x_b[inc] + feas_tol) / delta[inc]
    t_max = relaxed.min() if relaxed.size else INF
    if not np.isfinite(t_max):
        return -1, INF, False
    exact = np.full(delta.shape, INF)
    exact[dec] = (x_b[dec] - lo_b[dec]) / -delta[dec]
    with np.errstate(invalid="ignore"):
        exact[inc] = (up_b[inc] - x_b[inc]) / delta[inc]
    cand = np.flatnonzero(exact <= t_max)
    if bland:
        best = cand[np.argmin(basis[cand])]
    else:
        mags = np.abs(delta[cand])
        best = cand[np.argmax(mags)]
    step = max(exact[best], 0.0)
    return int(best), float(step), bool(delta[best] > 0)


def dual_ratio_test(d, alpha, status, want_positive, piv_tol, dual_tol):
    """Pick the entering column for a dual simplex pivot.

    ``status`` is 0 at lower, 1 at upper, anything else ineligible. When
    ``want_positive`` the leaving variable must increase. Returns -1 when
    no column qualifies (primal infeasible).
    """
    at_lo = status == 0
    at_up = status == 1
    if want_positive:
        elig = (at_lo & (alpha < -piv_tol)) | (at_up & (alpha > piv_tol))
    else:
        elig = (at_lo & (alpha > piv_tol)) | (at_up & (alpha < -piv_tol))
    idx = np.flatnonzero(elig)
    if idx.size == 0:
        return -1
    a = np.abs(alpha[idx])
    dd = np.abs(d[idx])
    relaxed = ((dd + dual_tol) / a).min()
    cand = idx[dd / a <= relaxed]
    return int(cand[np.argmax(np.abs(alpha[cand]))])


def eta_ftran(x, rows, etas, k):
    for j in range(k):
        r = rows[j]
        e = etas[j]
        xr = x[r] / e[r]
        if xr != 0.0:
            x -= xr * e
        x[r] = xr


def eta_btran(z, rows, etas, k):
    for j in range(k - 1, -1, -1):
        r = rows[j]
        e = etas[j]
        s = z @ e - z[r] * e[r]
        z[r] = (z[r] - s) / e[r]
