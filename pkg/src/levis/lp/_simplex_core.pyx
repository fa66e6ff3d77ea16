# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled primal simplex inner loop (bounded variables, dense tableau).

Mirrors ``_simplex_py.run_simplex`` operation for operation.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY, isfinite

cnp.import_array()

DEF OPTIMAL = 0
DEF UNBOUNDED = 1
DEF LIMIT = 2
DEF REFACTOR = 3


def run_simplex(double[:, ::1] T, double[::1] x, double[::1] d, double[::1] lb, double[::1] ub,
                long[::1] basis, long[::1] where, long max_pivots, long bland_after, long degenerate,
                long refactor_every, double opt_tol, double piv_tol, double feas_tol):
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t n = T.shape[1]
    cdef Py_ssize_t i, k, kk, j, r, leave, nnz
    cdef long pivots = 0, since_refactor = 0
    cdef bint bland, is_up, cand, hit_lower
    cdef double best, score, s, rate, slack, tmax, ratio, theta, span, step, piv, ci, dj, absr, bestabs
    cdef long bestbasis
    cdef cnp.ndarray[cnp.npy_intp, ndim=1] nzbuf = np.empty(n, dtype=np.intp)
    cdef cnp.npy_intp[::1] nzcols = nzbuf
    cdef double[::1] rowr
    cdef double xb, lbb, ubb

    while True:
        if pivots >= max_pivots:
            return LIMIT, pivots, degenerate
        if since_refactor >= refactor_every:
            return REFACTOR, pivots, degenerate
        bland = degenerate >= bland_after

        # pricing
        j = -1
        best = -1.0
        is_up = False
        for k in range(n):
            if where[k] >= 0 or not (lb[k] < ub[k]):
                continue
            cand = False
            if x[k] < ub[k] - feas_tol and d[k] < -opt_tol:
                cand = True
                s = 1.0
            elif x[k] > lb[k] + feas_tol and d[k] > opt_tol:
                cand = True
                s = -1.0
            if not cand:
                continue
            if bland:
                j = k
                is_up = s > 0
                break
            score = fabs(d[k])
            if score > best:
                best = score
                j = k
                is_up = s > 0
        if j < 0:
            return OPTIMAL, pivots, degenerate
        s = 1.0 if is_up else -1.0

        # ratio test, pass 1
        tmax = INFINITY
        for i in range(m):
            rate = s * T[i, j]
            xb = x[basis[i]]
            if rate > piv_tol and isfinite(lb[basis[i]]):
                slack = xb - lb[basis[i]]
            elif rate < -piv_tol and isfinite(ub[basis[i]]):
                slack = ub[basis[i]] - xb
            else:
                continue
            if slack < 0.0:
                slack = 0.0
            ratio = (slack + feas_tol) / fabs(rate)
            if ratio < tmax:
                tmax = ratio
        # pass 2
        r = -1
        theta = INFINITY
        hit_lower = False
        if tmax < INFINITY:
            bestabs = -1.0
            bestbasis = -1
            for i in range(m):
                rate = s * T[i, j]
                xb = x[basis[i]]
                if rate > piv_tol and isfinite(lb[basis[i]]):
                    slack = xb - lb[basis[i]]
                    cand = True
                elif rate < -piv_tol and isfinite(ub[basis[i]]):
                    slack = ub[basis[i]] - xb
                    cand = False
                else:
                    continue
                if slack < 0.0:
                    slack = 0.0
                absr = fabs(rate)
                ratio = slack / absr
                if ratio > tmax:
                    continue
                if bland:
                    if r < 0 or basis[i] < bestbasis:
                        r = i
                        bestbasis = basis[i]
                        theta = ratio
                        hit_lower = cand
                else:
                    if absr > bestabs:
                        bestabs = absr
                        r = i
                        theta = ratio
                        hit_lower = cand
        span = ub[j] - lb[j]
        if span <= theta:
            theta = span
            r = -1
        if theta == INFINITY:
            return UNBOUNDED, pivots, degenerate

        pivots += 1
        since_refactor += 1
        if theta <= 1e-12:
            degenerate += 1

        step = s * theta
        for i in range(m):
            x[basis[i]] -= step * T[i, j]
        if r < 0:
            x[j] = ub[j] if s > 0 else lb[j]
            continue
        x[j] += step
        leave = basis[r]
        x[leave] = lb[leave] if hit_lower else ub[leave]

        piv = T[r, j]
        rowr = T[r]
        nnz = 0
        for k in range(n):
            rowr[k] = rowr[k] / piv
            if rowr[k] != 0.0:
                nzcols[nnz] = k
                nnz += 1
        for i in range(m):
            if i == r:
                continue
            ci = T[i, j]
            if ci == 0.0:
                continue
            for kk in range(nnz):
                k = nzcols[kk]
                T[i, k] = T[i, k] - ci * rowr[k]
        dj = d[j]
        for kk in range(nnz):
            k = nzcols[kk]
            d[k] = d[k] - dj * rowr[k]
        d[j] = 0.0
        basis[r] = j
        where[j] = r
        where[leave] = -1
