"""Complementarity relaxation followed by a reduced branch-and-bound.

Each ReLU is written as z = p - q with p, q >= 0 and p q <= eps. An
augmented Lagrangian drives a projected-gradient inner loop to a local
solution; neurons are then split by the signs of (p, q) and only the
ambiguous ones keep a binary in the reduced problem.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bounds import interval_bounds
from .milp import (
    DegenerateCenter,
    NoAdversaryInBox,
    _check_query,
    _SingleConstraintSearch,
    make_witness,
    nearest_adversarial,
)
from .network import ActivationPattern, Ball, Box, Network, Phase, Specification, forward, is_verified, lp_norm

EPS_REG = 1e-5
TAU = 1e-6
RESIDUAL_TOL = 1e-6
MAX_INNER = 10_000
INNER_CAP = 20


@dataclass
class CCState:
    x: np.ndarray
    p: np.ndarray
    q: np.ndarray
    eps_reg: float = EPS_REG
    tau: float = TAU
    residual: float = math.inf
    iterations: int = 0

    def __post_init__(self):
        if np.any(self.p < 0) or np.any(self.q < 0):
            raise ValueError("complementarity variables must be nonnegative")


@dataclass
class NeuronPhases:
    active: np.ndarray
    inactive: np.ndarray
    ambiguous: np.ndarray

    @property
    def n(self) -> int:
        return self.active.size + self.inactive.size + self.ambiguous.size

    def phases(self, n_hidden: int) -> np.ndarray:
        ph = np.full(n_hidden, Phase.FREE, dtype=np.int8)
        ph[self.active] = Phase.ACTIVE
        ph[self.inactive] = Phase.INACTIVE
        return ph

    def to_dict(self) -> dict:
        return {"active": self.active.tolist(), "inactive": self.inactive.tolist(),
                "ambiguous": self.ambiguous.tolist()}


class _CCProblem:
    """Variables v = [x | P | Q | t]; layers of P, Q follow the hidden layout."""

    def __init__(self, net: Network, a_out, b_out: float, center, p_norm: float, box: Box, eps_reg: float):
        self.net = net
        self.d0 = net.input_dim
        self.N = net.n_hidden
        self.sizes = net.hidden_sizes
        self.offsets = np.cumsum([0] + self.sizes)
        self.c = np.asarray(center, dtype=float)
        self.p_norm = p_norm
        self.nt = 0 if p_norm == 2 else (1 if p_norm == np.inf else self.d0)
        self.lo = np.r_[box.lower, np.zeros(2 * self.N + self.nt)]
        self.hi = np.r_[box.upper, np.full(2 * self.N + self.nt, np.inf)]
        self.spec_w = np.asarray(a_out, dtype=float) @ net.weights[-1]
        self.spec_b = float(np.asarray(a_out) @ net.biases[-1]) + float(b_out)
        self.eps = eps_reg
        self.n_eq = self.N
        self.n_ineq = self.N + 1 + (2 * self.d0 if self.nt else 0)

    def split(self, v):
        d0, N = self.d0, self.N
        return v[:d0], v[d0 : d0 + N], v[d0 + N : d0 + 2 * N], v[d0 + 2 * N :]

    def layer_inputs(self, x, P):
        yield x
        for i in range(len(self.sizes) - 1):
            yield P[self.offsets[i] : self.offsets[i + 1]]

    def constraints(self, v):
        x, P, Q, t = self.split(v)
        h = np.empty(self.N)
        for i, prev in enumerate(self.layer_inputs(x, P)):
            s = slice(self.offsets[i], self.offsets[i + 1])
            h[s] = P[s] - Q[s] - self.net.weights[i] @ prev - self.net.biases[i]
        last = P[self.offsets[-2] :]
        g = [P * Q - self.eps, [self.spec_w @ last + self.spec_b]]
        if self.nt == 1:
            g += [x - self.c - t[0], self.c - x - t[0]]
        elif self.nt:
            g += [x - self.c - t, self.c - x - t]
        return h, np.concatenate(g)

    def objective(self, v):
        x, _, _, t = self.split(v)
        if self.nt == 0:
            dx = x - self.c
            return float(dx @ dx), np.r_[2 * dx, np.zeros(2 * self.N)]
        grad = np.zeros_like(v)
        grad[self.d0 + 2 * self.N :] = 1.0
        return float(t.sum()), grad

    def lagrangian(self, v, lam, mu, rho):
        f, grad = self.objective(v)
        h, g = self.constraints(v)
        y = lam + rho * h
        s = np.maximum(0.0, mu + rho * g)
        val = f + lam @ h + 0.5 * rho * (h @ h) + (s @ s - mu @ mu) / (2 * rho)
        x, P, Q, t = self.split(v)
        d0, N = self.d0, self.N
        gx = grad[:d0].copy()
        gP = grad[d0 : d0 + N].copy()
        gQ = grad[d0 + N : d0 + 2 * N].copy()
        gt = grad[d0 + 2 * N :].copy()
        gP += y
        gQ -= y
        for i in range(len(self.sizes)):
            yi = y[self.offsets[i] : self.offsets[i + 1]]
            back = self.net.weights[i].T @ yi
            if i == 0:
                gx -= back
            else:
                gP[self.offsets[i - 1] : self.offsets[i]] -= back
        sc = s[:N]
        gP += sc * Q
        gQ += sc * P
        gP[self.offsets[-2] :] += s[N] * self.spec_w
        if self.nt:
            sp, sm = s[N + 1 : N + 1 + d0], s[N + 1 + d0 :]
            gx += sp - sm
            if self.nt == 1:
                gt -= sp.sum() + sm.sum()
            else:
                gt -= sp + sm
        return val, np.concatenate([gx, gP, gQ, gt])

    def project(self, v):
        return np.clip(v, self.lo, self.hi)

    def residual(self, v) -> float:
        h, g = self.constraints(v)
        return max(np.abs(h).max(initial=0.0), np.maximum(g, 0.0).max(initial=0.0))


def _inner(prob: _CCProblem, v, lam, mu, rho, budget: int, tol: float, memory: int = 10):
    """Spectral projected gradient with a nonmonotone Armijo test over the last ``memory`` values."""
    val, g = prob.lagrangian(v, lam, mu, rho)
    recent = [val]
    step = 1.0 / max(1.0, rho)
    used = 0
    while used < budget:
        pg = prob.project(v - g) - v
        if np.abs(pg).max() <= tol:
            break
        d = prob.project(v - step * g) - v
        gd = float(g @ d)
        ref = max(recent)
        alpha = 1.0
        while True:
            used += 1
            cand = v + alpha * d
            cval, cg = prob.lagrangian(cand, lam, mu, rho)
            if cval <= ref + 1e-4 * alpha * gd or alpha < 1e-12 or used >= budget:
                break
            alpha *= 0.5
        s_, y_ = cand - v, cg - g
        sy = float(s_ @ y_)
        step = float(s_ @ s_) / sy if sy > 1e-16 else 1e6
        step = min(max(step, 1e-12), 1e6)
        v, val, g = cand, cval, cg
        recent.append(val)
        if len(recent) > memory:
            recent.pop(0)
    return v, used


def solve_cc_nlp(net: Network, spec: Specification, center, p_norm=np.inf, box: Optional[Box] = None,
                 eps_reg: float = EPS_REG, seed: Optional[int] = None, max_inner: int = MAX_INNER,
                 constraint: Optional[int] = None):
    """Local solution of the complementarity relaxation.

    Returns ``(x_tilde, CCState, converged)``. When ``constraint`` is None the
    constraint with the smallest margin at the center is targeted. ``seed``
    jitters the starting point; None starts from the exact forward pass at c.
    """
    c, p_norm, box = _check_query(net, spec, center, p_norm, box)
    if constraint is None:
        constraint = int(np.argmin(spec.margins(net(c))))
    prob = _CCProblem(net, spec.A[constraint], spec.b[constraint], c, p_norm, box, eps_reg)
    x0 = c.copy()
    if seed is not None:
        rng = np.random.default_rng(seed)
        x0 = np.clip(c + 1e-3 * rng.standard_normal(c.size), box.lower, box.upper)
    _, pre, _ = forward(net, x0)
    z = np.concatenate(pre) if pre else np.zeros(0)
    v = np.r_[x0, np.maximum(z, 0.0), np.maximum(-z, 0.0), np.zeros(prob.nt)]
    lam = np.zeros(prob.n_eq)
    mu = np.zeros(prob.n_ineq)
    rho = 10.0
    used = 0
    res = prob.residual(v)
    tol = 1e-2
    converged = False
    while used < max_inner:
        # inexact inner solves: multiplier updates make more progress than tight subproblems
        v, k = _inner(prob, v, lam, mu, rho, min(INNER_CAP, max_inner - used), tol)
        used += k
        h, g = prob.constraints(v)
        new_res = prob.residual(v)
        if new_res <= RESIDUAL_TOL:
            converged = True
            res = new_res
            break
        lam = lam + rho * h
        mu = np.maximum(0.0, mu + rho * g)
        if new_res > 0.25 * res:
            rho = min(rho * 10.0, 1e8)
        res = new_res
        tol = max(tol * 0.1, 1e-8)
    x, P, Q, _ = prob.split(v)
    state = CCState(x.copy(), P.copy(), Q.copy(), eps_reg, TAU, float(res), used)
    # the relaxation admits points a hair short of the boundary; snap to a true adversary when possible
    w = make_witness(net, spec.A[constraint], spec.b[constraint], c, x)
    x_tilde = np.clip(w, box.lower, box.upper) if w is not None else x.copy()
    return x_tilde, state, converged


def classify_neurons(state: CCState, tau: float = TAU) -> NeuronPhases:
    """I+ = {p > tau, q <= tau}, I- = {p <= tau, q > tau}, everything else ambiguous."""
    p, q = state.p, state.q
    act = (p > tau) & (q <= tau)
    ina = (p <= tau) & (q > tau)
    amb = ~(act | ina)
    return NeuronPhases(np.flatnonzero(act), np.flatnonzero(ina), np.flatnonzero(amb))


def reduced_mip(net: Network, spec: Specification, center, p_norm, box: Optional[Box], phases: NeuronPhases,
                incumbent: float = math.inf):
    """Branch-and-bound with I+ pinned active, I- pinned inactive, binaries for I0 only."""
    return nearest_adversarial(net, spec, center, p_norm, box, root_phases=phases.phases(net.n_hidden),
                               incumbent=incumbent)


def phases_consistent(net: Network, x, phases: NeuronPhases, tol: float = 1e-9) -> bool:
    """Pinned phases agree with the activations realized at x (z = 0 is compatible with both)."""
    _, pre, _ = forward(net, x)
    z = np.concatenate(pre) if pre else np.zeros(0)
    return bool(np.all(z[phases.active] >= -tol) and np.all(z[phases.inactive] <= tol))


def phases_certified(net: Network, box: Box, center, radius: float, phases: NeuronPhases) -> bool:
    """True when interval bounds over the ball's bounding box keep every pinned neuron in its phase."""
    c = np.asarray(center, dtype=float)
    reach = radius * (1 + 1e-9) + 1e-12
    region = box.intersect(Box(c - reach, c + reach))
    bounds = interval_bounds(net, region)
    return bool(np.all(bounds.lo[phases.active] >= 0) and np.all(bounds.hi[phases.inactive] <= 0))


def flip_certificate(net: Network, spec: Specification, center, p_norm, box: Box, radius: float,
                     phases: NeuronPhases):
    """Pinned neurons whose flipped phase provably admits no adversary closer than ``radius``.

    For each pin the LP relaxation with that neuron forced to the opposite
    phase is solved over the ball's bounding box; a bound >= radius (or an
    infeasible relaxation) certifies the pin. Returns (certified mask over the
    pinned indices, better candidate or None, number of LPs).
    """
    c = np.asarray(center, dtype=float)
    pinned = np.r_[phases.active, phases.inactive].astype(int)
    flipped = np.r_[np.full(phases.active.size, Phase.INACTIVE), np.full(phases.inactive.size, Phase.ACTIVE)]
    # any adversary closer than radius lies in this sub-box since ||.||_inf <= ||.||_p
    sub = Box(np.maximum(box.lower, c - radius), np.minimum(box.upper, c + radius))
    searches = [_SingleConstraintSearch(net, spec.A[j], spec.b[j], c, p_norm, sub) for j in range(spec.n_constraints)]
    free = np.full(net.n_hidden, Phase.FREE, dtype=np.int8)
    ok = np.ones(pinned.size, dtype=bool)
    better = None
    lps = 0
    ub = radius
    # a single unconstrained relaxation may certify every pin at once
    root = [srch.evaluate(free, ub) for srch in searches]
    lps += sum(r.lps for r in root)
    if all(r.status in ("infeasible", "pruned") for r in root):
        return ok, None, lps
    for i, (g, ph) in enumerate(zip(pinned, flipped)):
        node = free.copy()
        node[g] = ph
        for srch in searches:
            res = srch.evaluate(node, ub)
            lps += res.lps
            for cand in res.candidates:
                if cand.distance < ub and not is_verified(net, spec, cand.point):
                    better, ub = cand, cand.distance
            if res.status not in ("infeasible", "pruned"):
                ok[i] = False
                break
    return ok, better, lps


@dataclass
class GapReport:
    r_hybrid: float
    t_nlp: float
    t_mip: float
    certificate_ok: bool
    escalated: bool
    nlp_converged: bool = False
    r_full: Optional[float] = None
    gap: Optional[float] = None
    t_full: Optional[float] = None
    n_ambiguous: int = 0
    reasons: list = field(default_factory=list)
    flip_certified: bool = False
    released: int = 0

    def to_dict(self) -> dict:
        out = {"r_hybrid": self.r_hybrid, "t_nlp": self.t_nlp, "t_mip": self.t_mip,
               "certificate_ok": self.certificate_ok, "escalated": self.escalated,
               "nlp_converged": self.nlp_converged, "n_ambiguous": self.n_ambiguous,
               "flip_certified": self.flip_certified, "released": self.released}
        if self.r_full is not None:
            out.update(r_full=self.r_full, gap=self.gap, t_full=self.t_full)
        if self.reasons:
            out["reasons"] = list(self.reasons)
        return out


def hybrid_nearest_adversarial(net: Network, spec: Specification, center, p_norm=np.inf, box: Optional[Box] = None,
                               eps_reg: float = EPS_REG, tau: float = TAU, seed: Optional[int] = None,
                               audit: bool = False):
    """NLP, classification, reduced problem; returns ``(Ball, GapReport)``.

    ``certificate_ok`` reports whether activations at the reduced optimum
    agree with the pinned phases. Independently every pin is checked with a
    flipped-phase relaxation bounded by the reduced radius; pins that fail are
    released and the reduced problem is solved again with the old radius as
    incumbent, so the returned radius is the global optimum. An infeasible
    reduced problem falls back to the full search.
    """
    c, p_norm, box = _check_query(net, spec, center, p_norm, box)
    if not is_verified(net, spec, c):
        raise DegenerateCenter(Ball(c, 0.0, p_norm, witness=c.copy(), meta={"degenerate": True}))
    reasons = []
    t0 = time.perf_counter()
    best_state, converged = None, False
    best_dist = math.inf
    for j in range(spec.n_constraints):
        x, state, conv = solve_cc_nlp(net, spec, c, p_norm, box, eps_reg, seed, constraint=j)
        dist = lp_norm(x - c, p_norm) if not is_verified(net, spec, x) else math.inf
        if best_state is None or dist < best_dist:
            best_state, best_dist, converged = state, dist, conv
    t_nlp = time.perf_counter() - t0
    phases = classify_neurons(best_state, tau)

    t1 = time.perf_counter()
    ball = None
    if not converged:
        reasons.append("nlp did not converge")
    try:
        ball, _ = reduced_mip(net, spec, c, p_norm, box, phases)
    except NoAdversaryInBox:
        reasons.append("reduced problem infeasible")
    consistent = ball is not None and phases_consistent(net, ball.witness, phases)
    if ball is not None and not consistent:
        reasons.append("activations at the reduced optimum contradict the pinned phases")
    certified = False
    released = 0
    escalated = False
    if ball is not None:
        ok, _, _ = flip_certificate(net, spec, c, p_norm, box, ball.radius, phases)
        certified = bool(ok.all())
        if not certified:
            # keep only the certified pins and re-solve; exact by construction
            pinned = np.r_[phases.active, phases.inactive].astype(int)
            released = int((~ok).sum())
            kept = NeuronPhases(phases.active[ok[: phases.active.size]],
                                phases.inactive[ok[phases.active.size :]],
                                np.r_[phases.ambiguous, pinned[~ok]].astype(int))
            try:
                ball, _ = reduced_mip(net, spec, c, p_norm, box, kept, incumbent=ball.radius)
            except NoAdversaryInBox:
                pass
            reasons.append(f"{released} pinned phases released by the flip certificate")
    else:
        escalated = True
        ball, _ = nearest_adversarial(net, spec, c, p_norm, box)
    t_mip = time.perf_counter() - t1

    report = GapReport(ball.radius, t_nlp, t_mip, consistent, escalated, converged,
                       n_ambiguous=int(phases.ambiguous.size), reasons=reasons,
                       flip_certified=certified, released=released)
    if audit:
        t2 = time.perf_counter()
        full, _ = nearest_adversarial(net, spec, c, p_norm, box)
        report.t_full = time.perf_counter() - t2
        report.r_full = full.radius
        report.gap = abs(ball.radius - full.radius)
    ball = Ball(c, ball.radius, p_norm, witness=ball.witness,
                meta={**ball.meta, "solver": "hybrid", "phases": phases.to_dict(), "report": report.to_dict()})
    return ball, report
