"""Ground-truth machinery independent of the branch-and-bound engine.

Grid, ray and sampling oracles only evaluate the network forward. The
pattern-enumeration oracle solves each linear region separately with
HiGHS (p in {1, inf}) or an exhaustive active-set enumeration (p = 2).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .bounds import interval_bounds
from .network import (
    ActivationPattern,
    Ball,
    Box,
    Network,
    Phase,
    Specification,
    lp_norm,
    parse_norm,
    region_inequalities,
    region_maps,
)


class NotFound(Exception):
    """The oracle found no adversarial point at its resolution."""


@dataclass
class OracleReport:
    method: str
    distance: Optional[float] = None
    point: Optional[np.ndarray] = None
    step: Optional[float] = None
    n_samples: int = 0
    violations: list = field(default_factory=list)

    @property
    def n_violations(self) -> int:
        return len(self.violations)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "distance": self.distance,
            "point": None if self.point is None else self.point.tolist(),
            "step": self.step,
            "n_samples": self.n_samples,
            "n_violations": self.n_violations,
            "violations": [v.tolist() for v in self.violations[:100]],
        }


# --------------------------------------------------------------------------- Lipschitz baseline


def induced_norm(W: np.ndarray, p, max_iter: int = 500, tol: float = 1e-8) -> float:
    """Operator norm of W as a map (R^n, ||.||_p) -> (R^m, ||.||_p)."""
    p = parse_norm(p)
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if p == np.inf:
        return float(np.abs(W).sum(axis=1).max())
    if p == 1:
        return float(np.abs(W).sum(axis=0).max())
    v = np.ones(W.shape[1]) / math.sqrt(W.shape[1])
    sigma = 0.0
    for _ in range(max_iter):
        w = W.T @ (W @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        new = float(np.linalg.norm(W @ v))
        if abs(new - sigma) <= tol * max(1.0, new):
            sigma = new
            break
        sigma = new
    return sigma


def _dual(p: float) -> float:
    return {np.inf: 1.0, 1.0: np.inf, 2.0: 2.0}[p]


def lipschitz_constant(net: Network, p) -> float:
    return float(np.prod([induced_norm(W, p) for W in net.weights]))


def lipschitz_radius(net: Network, spec: Specification, center, p) -> float:
    """min_j g_j(c) / (||a_j||_dual * prod_i ||W^i||_p), clipped at 0."""
    p = parse_norm(p)
    c = np.asarray(center, dtype=float)
    L = lipschitz_constant(net, p)
    margins = spec.margins(net(c))
    if L == 0:
        return math.inf if np.all(margins > 0) else 0.0
    r = math.inf
    for a, g in zip(spec.A, margins):
        r = min(r, max(float(g), 0.0) / (lp_norm(a, _dual(p)) * L))
    return r


# --------------------------------------------------------------------------- grid and ray


def _grid_axes(center: np.ndarray, box: Box, step: float, half: float):
    axes = []
    for ci, lo, hi in zip(center, box.lower, box.upper):
        kmin = math.ceil((max(lo, ci - half) - ci) / step - 1e-9)
        kmax = math.floor((min(hi, ci + half) - ci) / step + 1e-9)
        axes.append(ci + step * np.arange(kmin, kmax + 1))
    return axes


def _pdist(V: np.ndarray, p: float) -> np.ndarray:
    if p == np.inf:
        return np.abs(V).max(axis=1)
    if p == 1:
        return np.abs(V).sum(axis=1)
    return np.sqrt((V * V).sum(axis=1))


def _scan(net, spec, center, p, axes, floor: float, limit: float, chunk=1 << 20):
    """Nearest adversarial point with floor < p-distance <= limit on the grid spanned by ``axes``."""
    best_d, best_x = math.inf, None
    first = axes[0]
    rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, len(axes) - 1) if len(axes) > 1 \
        else np.zeros((1, 0))
    rows_per = max(1, chunk // max(1, rest.shape[0]))
    for s in range(0, first.size, rows_per):
        f = first[s : s + rows_per]
        X = np.empty((f.size * rest.shape[0], len(axes)))
        X[:, 0] = np.repeat(f, rest.shape[0])
        X[:, 1:] = np.tile(rest, (f.size, 1))
        d = _pdist(X - center, p)
        keep = (d > floor) & (d <= limit)
        X, d = X[keep], d[keep]
        if X.shape[0] == 0:
            continue
        bad = spec.batch_margin(net.batch(X)) <= 0
        if not bad.any():
            continue
        k = int(np.argmin(np.where(bad, d, np.inf)))
        if d[k] < best_d:
            best_d, best_x = float(d[k]), X[k]
    return best_d, best_x


def grid_oracle_nearest(net: Network, spec: Specification, center, p, box: Box, step: float,
                        start_half_width: Optional[float] = None) -> OracleReport:
    """Exhaustive scan of the grid c + step * Z^d inside the box.

    The scan grows max-norm cubes around c; once an adversarial grid point at
    p-distance D <= half-width is found no unscanned point can be closer,
    because ||v||_inf <= ||v||_p.
    """
    p = parse_norm(p)
    c = np.asarray(center, dtype=float)
    if c.size > 3:
        raise ValueError("grid oracle supports at most 3 input dimensions")
    if step <= 0:
        raise ValueError("step must be positive")
    reach = float(np.max(np.maximum(c - box.lower, box.upper - c)))
    limit_all = reach * {np.inf: 1.0, 1.0: c.size, 2.0: math.sqrt(c.size)}[p]
    half = start_half_width or min(reach, 64 * step)
    floor = -1.0
    while True:
        # grid points with p-distance <= half lie in the max-norm cube of half-width half;
        # shells below floor were scanned already
        limit = limit_all if half >= reach else half
        d, x = _scan(net, spec, c, p, _grid_axes(c, box, step, min(half, reach)), floor, limit)
        if x is not None:
            return OracleReport("grid", d, x, step)
        if half >= reach:
            raise NotFound("no adversarial grid point in the box")
        floor = limit
        half = min(reach, 1.25 * half)


def ray_oracle(net: Network, spec: Specification, center, phi, box: Box, step: float) -> OracleReport:
    """Smallest k in {step, 2 step, ...} with c + k phi adversarial, before the ray leaves the box."""
    c = np.asarray(center, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if not np.any(phi != 0):
        raise ValueError("phi must be nonzero")
    kmax = math.inf
    for ci, fi, lo, hi in zip(c, phi, box.lower, box.upper):
        if fi > 0:
            kmax = min(kmax, (hi - ci) / fi)
        elif fi < 0:
            kmax = min(kmax, (lo - ci) / fi)
    n = int(math.floor(kmax / step + 1e-9))
    for s in range(1, n + 1, 1 << 18):
        ks = step * np.arange(s, min(n, s + (1 << 18) - 1) + 1)
        m = spec.batch_margin(net.batch(c + ks[:, None] * phi))
        bad = np.flatnonzero(m <= 0)
        if bad.size:
            k = float(ks[bad[0]])
            return OracleReport("ray", k, c + k * phi, step)
    raise NotFound("ray leaves the box before any adversarial point")


# --------------------------------------------------------------------------- sampling


def sample_ball(rng: np.random.Generator, center, radius: float, p, n: int) -> np.ndarray:
    """n uniform points from the closed p-ball."""
    p = parse_norm(p)
    c = np.asarray(center, dtype=float)
    d = c.size
    if p == np.inf:
        return c + rng.uniform(-radius, radius, (n, d))
    if d <= 4:
        out = np.empty((0, d))
        while out.shape[0] < n:
            U = rng.uniform(-1.0, 1.0, (2 * n, d))
            norms = np.abs(U).sum(axis=1) if p == 1 else np.sqrt((U * U).sum(axis=1))
            out = np.vstack([out, U[norms <= 1.0]])
        return c + radius * out[:n]
    if p == 2:
        G = rng.standard_normal((n, d))
        G /= np.linalg.norm(G, axis=1, keepdims=True)
        return c + radius * G * rng.uniform(0, 1, (n, 1)) ** (1.0 / d)
    E = rng.exponential(size=(n, d + 1))
    S = E[:, :d] / E.sum(axis=1, keepdims=True)
    return c + radius * S * rng.choice([-1.0, 1.0], size=(n, d))


def soundness_sample(net: Network, spec: Specification, ball: Ball, n: int, seed=0,
                     shrink: float = 1e-6) -> OracleReport:
    """Sample the shrunken ball and collect every adversarial sample."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    X = sample_ball(rng, ball.center, ball.radius * (1 - shrink), ball.p, n)
    m = spec.batch_margin(net.batch(X))
    bad = X[m <= 0]
    return OracleReport("sample", ball.radius, None, None, n, [x for x in bad])


# --------------------------------------------------------------------------- pattern enumeration


def _region_constraints(net, a_out, b_out, pattern, box):
    G, h = region_inequalities(net, pattern)
    A, v = region_maps(net, pattern)[-1]
    return np.vstack([G, (a_out @ A)[None, :]]), np.concatenate([h, [-b_out - float(a_out @ v)]])


def _project_enumerate(G, h, lb, ub, c, tol=1e-9) -> float:
    """min ||x - c||_2 over {G x <= h, lb <= x <= ub} by trying every active set of size <= d."""
    d = c.size
    Gf = np.vstack([G, np.eye(d), -np.eye(d)])
    hf = np.concatenate([h, ub, -lb])
    scale = np.linalg.norm(Gf, axis=1)
    zero = scale <= 1e-12
    # constant rows: 0 <= h either always holds or empties the region
    if np.any(hf[zero] < -1e-12):
        return math.inf
    Gf, hf = Gf[~zero] / scale[~zero, None], hf[~zero] / scale[~zero]
    best = math.inf
    feas_tol = 1e-9 * max(1.0, np.abs(hf).max())
    for size in range(0, d + 1):
        for S in itertools.combinations(range(Gf.shape[0]), size):
            if size:
                GS = Gf[list(S)]
                if np.linalg.matrix_rank(GS, tol=1e-10) < size:
                    continue
                lam = np.linalg.solve(GS @ GS.T, GS @ c - hf[list(S)])
                x = c - GS.T @ lam
            else:
                x = c
            if np.all(Gf @ x <= hf + feas_tol):
                best = min(best, float(np.linalg.norm(x - c)))
    return best


def region_distance(net: Network, a_out, b_out: float, pattern: ActivationPattern, center, p, box: Box) -> float:
    """Exact min ||x - c||_p over inputs realizing ``pattern`` with a_out . f(x) + b_out <= 0 (inf if empty)."""
    p = parse_norm(p)
    c = np.asarray(center, dtype=float)
    G, h = _region_constraints(net, np.asarray(a_out, dtype=float), float(b_out), pattern, box)
    d = c.size
    if p == 2:
        return _project_enumerate(G, h, box.lower, box.upper, c)
    # variables (x, t): t scalar for inf, vector for 1
    nt = 1 if p == np.inf else d
    A_ub = [np.hstack([G, np.zeros((G.shape[0], nt))])]
    b_ub = [h]
    T = np.ones((d, 1)) if p == np.inf else np.eye(d)
    A_ub += [np.hstack([np.eye(d), -T]), np.hstack([-np.eye(d), -T])]
    b_ub += [c, -c]
    cost = np.r_[np.zeros(d), np.ones(nt)]
    bounds = [(lo, hi) for lo, hi in zip(box.lower, box.upper)] + [(0, None)] * nt
    res = linprog(cost, A_ub=np.vstack(A_ub), b_ub=np.concatenate(b_ub), bounds=bounds, method="highs")
    if res.status == 2:
        return math.inf
    if res.status != 0:
        raise RuntimeError(f"oracle LP failed: {res.message}")
    return float(res.fun)


def pattern_enumeration_nearest(net: Network, spec: Specification, center, p, box: Box,
                                max_unstable: int = 12) -> float:
    """Minimum of region_distance over every pattern of the interval-unstable neurons."""
    bounds = interval_bounds(net, box)
    base = np.where(bounds.lo >= 0, Phase.ACTIVE, Phase.INACTIVE).astype(np.int8)
    unstable = np.flatnonzero(bounds.unstable)
    if unstable.size > max_unstable:
        raise ValueError(f"{unstable.size} unstable neurons exceed the enumeration limit {max_unstable}")
    best = math.inf
    for bits in itertools.product((Phase.INACTIVE, Phase.ACTIVE), repeat=unstable.size):
        ph = base.copy()
        ph[unstable] = bits
        pattern = ActivationPattern(ph, net.hidden_sizes)
        for j in range(spec.n_constraints):
            best = min(best, region_distance(net, spec.A[j], spec.b[j], pattern, center, p, box))
    return best

