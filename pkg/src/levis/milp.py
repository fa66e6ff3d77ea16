"""Exact nearest and directional adversarial points by branch-and-bound.

ReLUs are encoded with the Big-M formulation; each node solves the LP
relaxation with the bundled simplex. For p in {1, inf} the distance is
linearized with epigraph variables and the relaxation is exact once the
activation binaries are integral. For p = 2 nodes are bounded from below by a
polyhedral norm (which dominates the max-norm) and leaves are solved exactly
as Euclidean projections onto a linear region.
"""
from __future__ import annotations

import heapq
import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bounds import NeuronBounds, interval_bounds, margin_lower_bound
from .lp import EQ, GE, LE, LinearProgram, solve_lp
from .network import (
    ActivationPattern,
    Ball,
    Box,
    Network,
    Phase,
    Specification,
    forward,
    is_verified,
    lp_norm,
    parse_norm,
    region_inequalities,
    region_maps,
)
from .qp import project_polyhedron

KAPPA_MIN = 1e-9
PRUNE_RTOL = 1e-9
CLOSE_RTOL = 1e-7
INTEGRALITY_TOL = 1e-9
BOX_TOL = 1e-9  # witnesses may sit this far outside the box after nudging
_INACTIVE, _ACTIVE, _FREE = int(Phase.INACTIVE), int(Phase.ACTIVE), int(Phase.FREE)


class NoAdversaryInBox(Exception):
    """Every point of the box satisfies the specification."""


class NoAdversaryOnRay(Exception):
    """The ray leaves the box before the specification is violated."""


class CenterOutsideBox(ValueError):
    pass


class DegenerateCenter(Exception):
    """The center is itself adversarial; ``ball`` has radius 0 and witness c."""

    def __init__(self, ball: Ball):
        super().__init__("center is adversarial")
        self.ball = ball


@dataclass
class SearchStats:
    nodes: int = 0
    lps: int = 0
    pivots: int = 0
    qps: int = 0
    pruned: int = 0
    infeasible: int = 0
    max_depth: int = 0
    lower_bound: float = math.inf
    worst_prune_slack: float = math.inf
    seconds: float = 0.0
    # (node lower bound, true optimum of that subtree) pairs, only when requested
    pruned_bounds: list = field(default_factory=list)

    def merge(self, other: "SearchStats"):
        for name in ("nodes", "lps", "pivots", "qps", "pruned", "infeasible"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.max_depth = max(self.max_depth, other.max_depth)
        self.lower_bound = min(self.lower_bound, other.lower_bound)
        self.worst_prune_slack = min(self.worst_prune_slack, other.worst_prune_slack)
        self.seconds += other.seconds
        self.pruned_bounds.extend(other.pruned_bounds)

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "lps": self.lps,
            "pivots": self.pivots,
            "qps": self.qps,
            "pruned": self.pruned,
            "max_depth": self.max_depth,
            "seconds": self.seconds,
        }


@dataclass(order=True)
class BnBNode:
    lower_bound: float
    seq: int
    phases: np.ndarray = field(compare=False)
    depth: int = field(compare=False, default=0)


@dataclass
class _Candidate:
    distance: float
    point: np.ndarray


@dataclass
class _NodeResult:
    status: str  # infeasible | pruned | closed | branch
    value: float = math.inf
    candidates: list = field(default_factory=list)
    branch_on: int = -1
    lps: int = 0
    pivots: int = 0
    qps: int = 0


# --------------------------------------------------------------------------- encoding


class _Encoding:
    """Big-M MILP relaxation of one node.

    Variable layout: x | post-activations of non-inactive neurons | indicators
    of unstable neurons | distance epigraph variables.
    """

    def __init__(self, net: Network, bounds: NeuronBounds, phases: np.ndarray, box: Box,
                 n_hidden_layers: Optional[int] = None):
        d0 = net.input_dim
        n_layers = net.n_layers - 1 if n_hidden_layers is None else n_hidden_layers
        lo_all, hi_all = bounds.lo, bounds.hi
        self.d0 = d0
        self.lb = list(box.lower)
        self.ub = list(box.upper)
        nvar = d0
        rows: list = []
        self.free: list[tuple[int, int]] = []  # (neuron flat index, indicator var)
        self.post_var = np.full(net.n_hidden, -1, dtype=int)
        prev_vars = np.arange(d0)
        offset = 0
        for li in range(n_layers):
            W, b = net.weights[li], net.biases[li]
            n = W.shape[0]
            present = prev_vars >= 0
            pv = prev_vars[present]
            Wp = W[:, present]
            cur = np.full(n, -1, dtype=int)
            for k in range(n):
                g = offset + k
                lo, hi = lo_all[g], hi_all[g]
                ph = int(phases[g])
                if ph == _FREE:
                    if hi <= 0:
                        continue
                    if lo >= 0:
                        ph = _ACTIVE
                w = Wp[k]
                if ph == _INACTIVE:
                    if hi > 0:
                        rows.append((pv, w, None, LE, -b[k]))
                    continue
                zv = nvar
                nvar += 1
                cur[k] = zv
                self.post_var[g] = zv
                if ph == _ACTIVE:
                    self.lb.append(max(lo, 0.0))
                    self.ub.append(max(hi, 0.0))
                    rows.append((pv, -w, [(zv, 1.0)], EQ, b[k]))
                else:
                    av = nvar
                    nvar += 1
                    self.lb += [0.0, 0.0]
                    self.ub += [hi, 1.0]
                    self.free.append((g, av))
                    rows.append((pv, -w, [(zv, 1.0)], GE, b[k]))
                    rows.append((pv, -w, [(zv, 1.0), (av, -lo)], LE, b[k] - lo))
                    rows.append((pv[:0], w[:0], [(zv, 1.0), (av, -hi)], LE, 0.0))
            prev_vars = cur
            offset += n
        self.last_vars = prev_vars
        self.rows = rows
        self.nvar = nvar

    def matrix(self, extra_vars: int, extra_rows) -> tuple:
        nv = self.nvar + extra_vars
        m = len(self.rows) + len(extra_rows)
        A = np.zeros((m, nv))
        senses = np.empty(m, dtype=int)
        rhs = np.empty(m)
        for i, (pv, w, extra, sense, r) in enumerate(itertools.chain(self.rows, extra_rows)):
            if len(pv):
                A[i, pv] = w
            if extra:
                for v, coef in extra:
                    A[i, v] += coef
            senses[i] = sense
            rhs[i] = r
        return A, senses, rhs


def _objective_rows(enc: _Encoding, center: np.ndarray, p: float):
    """Epigraph rows for the distance objective: (n_extra_vars, rows, cost entries)."""
    d0 = enc.d0
    t0 = enc.nvar
    rows = []
    xs = np.arange(d0)
    if p == np.inf:
        for i in range(d0):
            rows.append((xs[i : i + 1], np.ones(1), [(t0, -1.0)], LE, center[i]))
            rows.append((xs[i : i + 1], -np.ones(1), [(t0, -1.0)], LE, -center[i]))
        return 1, rows, [(t0, 1.0)]
    if p == 1:
        for i in range(d0):
            rows.append((xs[i : i + 1], np.ones(1), [(t0 + i, -1.0)], LE, center[i]))
            rows.append((xs[i : i + 1], -np.ones(1), [(t0 + i, -1.0)], LE, -center[i]))
        return d0, rows, [(t0 + i, 1.0) for i in range(d0)]
    # p == 2: t >= u.(x - c) for u in a set of unit vectors containing +-e_i
    for u in _l2_cut_directions(d0):
        rows.append((xs, u, [(t0, -1.0)], LE, float(u @ center)))
    return 1, rows, [(t0, 1.0)]


def _l2_cut_directions(d0: int) -> np.ndarray:
    dirs = [np.eye(d0), -np.eye(d0)]
    if 2 <= d0 <= 4:
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=d0)))
        dirs.append(signs / math.sqrt(d0))
    return np.vstack(dirs)


# --------------------------------------------------------------------------- witnesses


def _margin(net: Network, a_out: np.ndarray, b_out: float, x: np.ndarray) -> float:
    return float(a_out @ forward(net, x)[0] + b_out)


def make_witness(net: Network, a_out, b_out, center, x) -> Optional[np.ndarray]:
    """An input near x (pushed away from the center) whose margin is <= 0, or None."""
    x = np.asarray(x, dtype=float)
    if _margin(net, a_out, b_out, x) <= 0:
        return x
    v = x - center
    if np.any(v != 0):
        s = 1e-13
        while s <= CLOSE_RTOL / 2:
            y = center + v * (1.0 + s)
            if _margin(net, a_out, b_out, y) <= 0:
                return y
            s *= 2.0
    # step along the local gradient of the margin
    pattern = ActivationPattern.of_input(net, x)
    A, _ = region_maps(net, pattern)[-1]
    g = a_out @ A
    gg = float(g @ g)
    if gg == 0:
        return None
    m0 = _margin(net, a_out, b_out, x)
    for factor in (1.0, 1.0 + 1e-9, 1.0 + 1e-6):
        y = x - (m0 * factor + 1e-15 * (1 + abs(m0))) * g / gg
        if _margin(net, a_out, b_out, y) <= 0:
            return y
    return None


# --------------------------------------------------------------------------- branch and bound


class _SingleConstraintSearch:
    """min ||x - c||_p  s.t.  a_out . f(x) + b_out <= 0,  x in box."""

    def __init__(self, net: Network, a_out, b_out: float, center, p: float, box: Box,
                 root_phases: Optional[np.ndarray] = None, record_pruned: bool = False):
        self.net = net
        self.a_out = np.asarray(a_out, dtype=float)
        self.b_out = float(b_out)
        self.center = np.asarray(center, dtype=float)
        self.p = p
        self.box = box
        self.root_phases = (
            np.full(net.n_hidden, Phase.FREE, dtype=np.int8) if root_phases is None
            else np.asarray(root_phases, dtype=np.int8).copy()
        )
        self.record_pruned = record_pruned
        self.spec_w = self.a_out @ net.weights[-1]
        self.spec_rhs = -self.b_out - float(self.a_out @ net.biases[-1])

    # node evaluation is a pure function of (phases, incumbent)
    def evaluate(self, phases: np.ndarray, ub: float) -> _NodeResult:
        box = self.box
        if math.isfinite(ub):
            reach = ub * (1 + 1e-9) + 1e-12
            box = box.intersect(Box(self.center - reach, self.center + reach))
        bounds = interval_bounds(self.net, box, phases)
        if bounds is None:
            return _NodeResult("infeasible")
        if margin_lower_bound(self.net, self.a_out, self.b_out, bounds) > 0:
            return _NodeResult("infeasible")

        enc = _Encoding(self.net, bounds, phases, box)
        n_extra, obj_rows, cost_entries = _objective_rows(enc, self.center, self.p)
        last = enc.last_vars
        present = last >= 0
        spec_row = (last[present], self.spec_w[present], None, LE, self.spec_rhs)
        A, senses, rhs = enc.matrix(n_extra, obj_rows + [spec_row])
        cost = np.zeros(enc.nvar + n_extra)
        for v, cf in cost_entries:
            cost[v] = cf
        lb = np.r_[enc.lb, np.zeros(n_extra)]
        ub_vars = np.r_[enc.ub, np.full(n_extra, np.inf)]
        out = solve_lp(LinearProgram(cost, A, senses, rhs, lb, ub_vars))
        res = _NodeResult("branch", lps=1, pivots=out.pivots)
        if not out.optimal:
            res.status = "infeasible"
            return res
        val = max(out.objective, 0.0)
        res.value = val
        if val >= ub - PRUNE_RTOL * max(1.0, ub):
            res.status = "pruned"
            return res

        x = out.x[: enc.d0]
        w = make_witness(self.net, self.a_out, self.b_out, self.center, x)
        if w is not None and self.box.contains(w, BOX_TOL):
            res.candidates.append(_Candidate(lp_norm(w - self.center, self.p), w))

        eff = phases.copy()
        lo, hi = bounds.lo, bounds.hi
        free_mask = eff == Phase.FREE
        eff[free_mask & (lo >= 0)] = Phase.ACTIVE
        eff[free_mask & (hi <= 0)] = Phase.INACTIVE
        leaf = not enc.free

        if self.p == 2:
            pattern = ActivationPattern(eff, self.net.hidden_sizes) if leaf else ActivationPattern.of_input(self.net, x)
            q = self._region_projection(pattern, box)
            res.qps += 1
            if q is not None:
                res.candidates.append(q)
                if leaf:
                    res.status = "closed"
                    res.value = q.distance
                    return res
            elif leaf:
                res.status = "infeasible"
                return res
        else:
            best = min((c.distance for c in res.candidates), default=math.inf)
            if best <= val + CLOSE_RTOL * max(1.0, val):
                res.status = "closed"
                res.value = best
                return res
            if leaf:
                # exact relaxation but no usable witness; keep the bound, report the LP point
                res.status = "closed"
                res.candidates.append(_Candidate(val, x))
                return res

        res.branch_on = self._choose_branch(enc, out.x)
        return res

    def _choose_branch(self, enc: _Encoding, sol: np.ndarray) -> int:
        best_g, best_frac = -1, -1.0
        for g, av in enc.free:  # ordered by (layer, index)
            a = sol[av]
            frac = min(a, 1.0 - a)
            if frac > best_frac + INTEGRALITY_TOL:
                best_g, best_frac = g, frac
        return best_g

    def _region_projection(self, pattern: ActivationPattern, box: Box) -> Optional[_Candidate]:
        G, h = region_inequalities(self.net, pattern)
        A, v = region_maps(self.net, pattern)[-1]
        g_spec = self.a_out @ A
        d0 = self.net.input_dim
        G = np.vstack([G, g_spec[None, :], np.eye(d0), -np.eye(d0)])
        h = np.concatenate([h, [-self.b_out - float(self.a_out @ v)], box.upper, -box.lower])
        y = project_polyhedron(G, h, self.center)
        if y is None:
            return None
        if np.max(G @ y - h) > 1e-7 * max(1.0, np.abs(h).max()):
            return None
        w = make_witness(self.net, self.a_out, self.b_out, self.center, y)
        if w is None or not self.box.contains(w, BOX_TOL):
            return _Candidate(lp_norm(y - self.center, 2), y)
        return _Candidate(lp_norm(w - self.center, 2), w)

    def run(self, incumbent: float = math.inf, workers: int = 1, node_limit: Optional[int] = None):
        """Best-first search; returns (distance, point) or None, and stats."""
        stats = SearchStats()
        t0 = time.perf_counter()
        seq = itertools.count()
        heap = [BnBNode(0.0, next(seq), self.root_phases, 0)]
        best: Optional[_Candidate] = None
        ub = incumbent
        closed_values = []
        cache: dict[int, tuple[float, object]] = {}
        pool = ThreadPoolExecutor(workers) if workers > 1 else None
        try:
            while heap:
                if node_limit is not None and stats.nodes >= node_limit:
                    stats.lower_bound = min(stats.lower_bound, heap[0].lower_bound)
                    break
                if pool is not None:
                    for nd in heapq.nsmallest(workers, heap):
                        hit = cache.get(nd.seq)
                        if (hit is None or hit[0] != ub) and nd.lower_bound < ub:
                            cache[nd.seq] = (ub, pool.submit(self.evaluate, nd.phases, ub))
                node = heapq.heappop(heap)
                if node.lower_bound >= ub - PRUNE_RTOL * max(1.0, ub):
                    stats.pruned += 1
                    stats.lower_bound = min(stats.lower_bound, node.lower_bound)
                    cache.pop(node.seq, None)
                    continue
                hit = cache.pop(node.seq, None)
                if hit is not None and hit[0] == ub:
                    res = hit[1].result()
                else:
                    res = self.evaluate(node.phases, ub)
                stats.nodes += 1
                stats.lps += res.lps
                stats.pivots += res.pivots
                stats.qps += res.qps
                stats.max_depth = max(stats.max_depth, node.depth)
                for cand in res.candidates:
                    if cand.distance < ub:
                        ub = cand.distance
                        best = cand
                if res.status == "infeasible":
                    stats.infeasible += 1
                    continue
                if res.status == "pruned":
                    stats.pruned += 1
                    stats.lower_bound = min(stats.lower_bound, res.value)
                    if self.record_pruned:
                        stats.pruned_bounds.append((res.value, node.phases.copy(), ub))
                    continue
                if res.status == "closed":
                    closed_values.append(res.value)
                    continue
                g = res.branch_on
                for phase in (Phase.INACTIVE, Phase.ACTIVE):
                    child = node.phases.copy()
                    child[g] = phase
                    heapq.heappush(heap, BnBNode(res.value, next(seq), child, node.depth + 1))
        finally:
            if pool is not None:
                pool.shutdown(wait=True, cancel_futures=True)
        if closed_values:
            stats.lower_bound = min(stats.lower_bound, min(closed_values))
        stats.lower_bound = min(stats.lower_bound, ub)
        stats.worst_prune_slack = 0.0 if best is None else stats.lower_bound - best.distance
        stats.seconds = time.perf_counter() - t0
        if best is None or (math.isfinite(incumbent) and best.distance >= incumbent):
            return None, stats
        return (best.distance, best.point), stats


# --------------------------------------------------------------------------- public API


def _check_query(net: Network, spec: Specification, center, p, box: Optional[Box]):
    c = np.asarray(center, dtype=float).ravel()
    if c.shape[0] != net.input_dim:
        raise ValueError(f"center has dimension {c.shape[0]}, network expects {net.input_dim}")
    if spec.output_dim != net.output_dim:
        raise ValueError("specification and network output dimensions differ")
    p = parse_norm(p)
    if box is None:
        from .network import default_box

        box = default_box(net.input_dim)
    if not box.bounded:
        raise ValueError("the search box must be bounded")
    if not box.contains(c):
        raise CenterOutsideBox("center outside box")
    return c, p, box


def nearest_adversarial(net: Network, spec: Specification, center, p=np.inf, box: Optional[Box] = None,
                        root_phases: Optional[np.ndarray] = None, incumbent: float = math.inf,
                        workers: int = 1, record_pruned: bool = False):
    """Closest adversarial input to ``center`` in the p-norm.

    Returns ``(Ball, ActivationPattern)``; the ball's witness is the nearest
    adversarial point and the pattern is the one it realizes. Raises
    ``DegenerateCenter`` if the center is adversarial and ``NoAdversaryInBox``
    if the specification holds on the whole box. ``root_phases`` pins neuron
    phases (used by the reduced problem); ``incumbent`` is a known upper bound.
    """
    c, p, box = _check_query(net, spec, center, p, box)
    if not is_verified(net, spec, c):
        raise DegenerateCenter(Ball(c, 0.0, p, witness=c.copy(), meta={"degenerate": True}))
    stats = SearchStats()
    best = None
    best_j = -1
    ub = incumbent
    for j in range(spec.n_constraints):
        search = _SingleConstraintSearch(net, spec.A[j], spec.b[j], c, p, box, root_phases, record_pruned)
        found, st = search.run(ub, workers=workers)
        stats.merge(st)
        if found is not None and found[0] < ub:
            ub, best, best_j = found[0], found, j
    if best is None:
        raise NoAdversaryInBox("no adversarial input in the box")
    dist, point = best
    ball = Ball(c, lp_norm(point - c, p), p, witness=point,
                meta={"solver": "mip", "constraint": best_j, "stats": stats})
    return ball, ActivationPattern.of_input(net, point)


def _cos_sin(theta_deg: float) -> tuple[float, float]:
    t = float(theta_deg) % 360.0
    exact = {0.0: (1.0, 0.0), 90.0: (0.0, 1.0), 180.0: (-1.0, 0.0), 270.0: (0.0, -1.0)}
    if t in exact:
        return exact[t]
    r = math.radians(t)
    return math.cos(r), math.sin(r)


@dataclass
class Direction:
    """Search direction phi(theta) = d cos(theta) + q sin(theta) anchored at an adversary.

    d = (c - b) / ||c - b||_inf points from the anchor b through the center c;
    q is the seed xi with its component along d removed.
    """

    center: np.ndarray
    anchor: np.ndarray
    theta: float
    xi: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).ravel()
        self.anchor = np.asarray(self.anchor, dtype=float).ravel()
        self.xi = np.asarray(self.xi, dtype=float).ravel()
        diff = self.center - self.anchor
        scale = np.abs(diff).max() if diff.size else 0.0
        if scale == 0:
            raise ValueError("direction anchor coincides with the center")
        self.d = diff / scale
        self.q = self.xi - (self.xi @ self.d) / (self.d @ self.d) * self.d
        cos, sin = _cos_sin(self.theta)
        self.phi = self.d * cos + self.q * sin

    @classmethod
    def sample(cls, center, anchor, theta: float, seed=None, rng: Optional[np.random.Generator] = None):
        rng = np.random.default_rng(seed) if rng is None else rng
        xi = rng.standard_normal(np.asarray(center).size)
        return cls(center, anchor, theta, xi, seed)

    def to_dict(self) -> dict:
        return {"theta": self.theta, "xi": self.xi.tolist(), "seed": self.seed, "phi": self.phi.tolist()}


@dataclass
class DirectionalResult:
    point: np.ndarray
    distance: float
    k: float
    direction: Direction
    stats: SearchStats = field(default_factory=SearchStats)

    def to_dict(self, p=np.inf) -> dict:
        return {
            "point": self.point.tolist(),
            "distance": self.distance,
            "k": self.k,
            "p": "inf" if parse_norm(p) == np.inf else int(parse_norm(p)),
            "direction": self.direction.to_dict(),
        }


def ray_extent(center: np.ndarray, phi: np.ndarray, box: Box) -> float:
    """Largest k with center + k phi inside the box."""
    k = math.inf
    for ci, fi, lo, hi in zip(center, phi, box.lower, box.upper):
        if fi > 0:
            k = min(k, (hi - ci) / fi)
        elif fi < 0:
            k = min(k, (lo - ci) / fi)
    return k


def ray_network(net: Network, center: np.ndarray, phi: np.ndarray) -> Network:
    """Network of the scalar k along center + k phi."""
    W0, b0 = net.weights[0], net.biases[0]
    return Network([W0 @ phi[:, None]] + list(net.weights[1:]), [W0 @ center + b0] + list(net.biases[1:]))


def directional_adversarial(net: Network, spec: Specification, center, direction: Direction, p=np.inf,
                            box: Optional[Box] = None, workers: int = 1) -> DirectionalResult:
    """Nearest adversarial point on the ray center + k phi, k > 0.

    Since ||b - c||_p = k ||phi||_p the search minimizes k; the returned
    distance is measured in the p-norm.
    """
    c, p, box = _check_query(net, spec, center, p, box)
    phi = direction.phi
    if not np.any(phi != 0):
        raise ValueError("degenerate search direction (phi = 0)")
    if not is_verified(net, spec, c):
        raise DegenerateCenter(Ball(c, 0.0, p, witness=c.copy(), meta={"degenerate": True}))
    k_max = ray_extent(c, phi, box)
    if not k_max >= KAPPA_MIN:
        raise NoAdversaryOnRay("ray leaves the box immediately")
    rnet = ray_network(net, c, phi)
    kbox = Box([KAPPA_MIN], [k_max])
    stats = SearchStats()
    best_k = math.inf
    for j in range(spec.n_constraints):
        search = _SingleConstraintSearch(rnet, spec.A[j], spec.b[j], np.zeros(1), np.inf, kbox)
        found, st = search.run(best_k, workers=workers)
        stats.merge(st)
        if found is not None and found[0] < best_k:
            best_k = float(found[1][0])
    if not math.isfinite(best_k):
        raise NoAdversaryOnRay("no adversarial point on the ray inside the box")
    k = best_k
    point = c + k * phi
    s = 1e-13
    while is_verified(net, spec, point) and s < 1e-7:
        k = best_k * (1 + s)
        point = c + k * phi
        s *= 2
    return DirectionalResult(point, k * lp_norm(phi, p), k, direction, stats)


def tighten_bounds_lp(net: Network, box: Box) -> NeuronBounds:
    """Interval bounds tightened layer by layer with the LP relaxation of the preceding layers."""
    bounds = interval_bounds(net, box)
    free = np.full(net.n_hidden, Phase.FREE, dtype=np.int8)
    lowers = [lo.copy() for lo in bounds.lower]
    uppers = [hi.copy() for hi in bounds.upper]
    for li in range(1, net.n_layers - 1):
        lowers[li], uppers[li] = _propagate_from(net, lowers, uppers, li)
        enc = _Encoding(net, NeuronBounds(lowers, uppers), free, box, n_hidden_layers=li)
        A, senses, rhs = enc.matrix(0, [])
        last = enc.last_vars
        present = last >= 0
        W, b = net.weights[li], net.biases[li]
        for k in range(W.shape[0]):
            cost = np.zeros(enc.nvar)
            cost[last[present]] = W[k, present]
            for sign in (1.0, -1.0):
                out = solve_lp(LinearProgram(sign * cost, A, senses, rhs, enc.lb, enc.ub))
                if not out.optimal:
                    continue
                val = sign * out.objective + b[k]
                # outward slack covers the LP feasibility tolerance
                if sign > 0:
                    lowers[li][k] = max(lowers[li][k], val - 1e-7 * (1 + abs(val)))
                else:
                    uppers[li][k] = min(uppers[li][k], val + 1e-7 * (1 + abs(val)))
    return NeuronBounds(lowers, uppers)


def _propagate_from(net: Network, lowers, uppers, layer: int):
    W, b = net.weights[layer], net.biases[layer]
    lo, hi = np.maximum(lowers[layer - 1], 0.0), np.maximum(uppers[layer - 1], 0.0)
    Wp, Wn = np.maximum(W, 0.0), np.minimum(W, 0.0)
    zl = Wp @ lo + Wn @ hi + b
    zu = Wp @ hi + Wn @ lo + b
    return np.maximum(zl, lowers[layer]), np.minimum(zu, uppers[layer])
