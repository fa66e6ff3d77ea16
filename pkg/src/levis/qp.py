"""Euclidean projection onto a polyhedron by a primal active-set method.

Solves  min ||x - c||^2  s.t.  G x <= h.  Equality subproblems are solved
through the normal equations of the working set.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .lp import LinearProgram, solve_lp


def _feasible_point(G, h, c) -> Optional[np.ndarray]:
    """Point of {G x <= h} closest to c in the max-norm (an LP), or None."""
    n = G.shape[1]
    # variables (x, t): G x <= h ; +-(x - c) <= t
    I = np.eye(n)
    A = np.vstack([
        np.hstack([G, np.zeros((G.shape[0], 1))]),
        np.hstack([I, -np.ones((n, 1))]),
        np.hstack([-I, -np.ones((n, 1))]),
    ])
    b = np.concatenate([h, c, -c])
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    lp = LinearProgram(cost, A, np.full(A.shape[0], -1), b, np.r_[np.full(n, -np.inf), 0.0], np.inf)
    out = solve_lp(lp)
    return out.x[:n] if out.optimal else None


def project_polyhedron(G, h, c, x0=None, tol: float = 1e-8, max_iter: int = 500) -> Optional[np.ndarray]:
    """Minimizer of ||x - c||_2 over {G x <= h}; None if the set is empty."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    scale = np.linalg.norm(G, axis=1)
    keep = scale > 0
    if np.any(h[~keep] < -tol):
        return None
    G = G[keep] / scale[keep, None]
    h = h[keep] / scale[keep]
    if G.shape[0] == 0:
        return c.copy()

    if np.all(G @ c <= h + tol):
        return c.copy()
    x = _feasible_point(G, h, c) if x0 is None else np.asarray(x0, dtype=float).copy()
    if x is None:
        return None
    n = x.shape[0]

    slack = h - G @ x
    work: list[int] = []
    for i in np.argsort(slack):
        if slack[i] > 1e-9:
            break
        if len(work) >= n:
            break
        cand = G[work + [int(i)]]
        if np.linalg.matrix_rank(cand, tol=1e-10) == len(work) + 1:
            work.append(int(i))

    for _ in range(max_iter):
        g = x - c
        if work:
            Gw = G[work]
            lam = np.linalg.lstsq(Gw @ Gw.T, -(Gw @ g), rcond=None)[0]
            step = -g - Gw.T @ lam
        else:
            lam = np.zeros(0)
            step = -g
        if np.linalg.norm(step) <= tol * max(1.0, np.linalg.norm(g)):
            if lam.size == 0 or lam.min() >= -tol:
                return x
            work.pop(int(np.argmin(lam)))
            continue
        Gs = G @ step
        alpha, block = 1.0, -1
        free = np.ones(G.shape[0], dtype=bool)
        free[work] = False
        room = h - G @ x
        mask = free & (Gs > 1e-14)
        if mask.any():
            ratios = np.where(mask, np.maximum(room, 0.0) / np.where(mask, Gs, 1.0), np.inf)
            k = int(np.argmin(ratios))
            if ratios[k] < alpha:
                alpha, block = float(ratios[k]), k
        x = x + alpha * step
        if block >= 0:
            # a blocking row has G_i s > 0 while G_W s = 0, so it is independent of W
            work.append(block)
    return x
