"""Reference (numpy) implementation of the primal simplex inner loop.

Must stay step-for-step identical to ``_simplex_core.pyx``: same pricing,
same ratio test, same tie breaking, same update order.
"""
import numpy as np

OPTIMAL, UNBOUNDED, LIMIT, REFACTOR = 0, 1, 2, 3


def run_simplex(T, x, d, lb, ub, basis, where, max_pivots, bland_after, degenerate,
                refactor_every, opt_tol, piv_tol, feas_tol):
    m = T.shape[0]
    nonbasic = where < 0
    movable = nonbasic & (lb < ub)
    pivots = 0
    since_refactor = 0
    while True:
        if pivots >= max_pivots:
            return LIMIT, pivots, degenerate
        if since_refactor >= refactor_every:
            return REFACTOR, pivots, degenerate
        bland = degenerate >= bland_after

        # pricing
        at_lo = x <= lb + feas_tol
        at_hi = x >= ub - feas_tol
        up = movable & ~at_hi & (d < -opt_tol)
        down = movable & ~at_lo & (d > opt_tol)
        cand = up | down
        if not cand.any():
            return OPTIMAL, pivots, degenerate
        if bland:
            j = int(np.flatnonzero(cand)[0])
        else:
            score = np.where(cand, np.abs(d), -1.0)
            j = int(np.argmax(score))
        s = 1.0 if up[j] else -1.0

        # ratio test (two-pass, Harris style)
        alpha = T[:, j]
        rate = s * alpha
        xb = x[basis]
        lbb = lb[basis]
        ubb = ub[basis]
        dec = (rate > piv_tol) & np.isfinite(lbb)
        inc = (rate < -piv_tol) & np.isfinite(ubb)
        slack = np.full(m, np.inf)
        slack[dec] = xb[dec] - lbb[dec]
        slack[inc] = ubb[inc] - xb[inc]
        lim = dec | inc
        absr = np.abs(rate)
        r = -1
        theta = np.inf
        if lim.any():
            relaxed = np.where(lim, (np.maximum(slack, 0.0) + feas_tol) / np.where(lim, absr, 1.0), np.inf)
            tmax = relaxed.min()
            exact = np.where(lim, np.maximum(slack, 0.0) / np.where(lim, absr, 1.0), np.inf)
            ok = lim & (exact <= tmax)
            if bland:
                rows = np.flatnonzero(ok)
                r = int(rows[np.argmin(basis[rows])])
            else:
                r = int(np.argmax(np.where(ok, absr, -1.0)))
            theta = exact[r]
        span = ub[j] - lb[j]
        if span <= theta:
            # bound flip, no basis change
            theta = span
            r = -1
        if theta == np.inf:
            return UNBOUNDED, pivots, degenerate

        pivots += 1
        since_refactor += 1
        if theta <= 1e-12:
            degenerate += 1

        step = s * theta
        x[basis] -= step * alpha
        if r < 0:
            x[j] = ub[j] if s > 0 else lb[j]
            continue
        x[j] += step
        leave = basis[r]
        x[leave] = lbb[r] if dec[r] else ubb[r]

        piv = T[r, j]
        T[r] /= piv
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        dj = d[j]
        d -= dj * T[r]
        d[j] = 0.0
        basis[r] = j
        where[j] = r
        where[leave] = -1
        nonbasic[j] = False
        nonbasic[leave] = True
        movable[j] = False
        movable[leave] = lb[leave] < ub[leave]
