"""Center refinement (alpha) and ball-union collection (beta)."""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .milp import (
    CenterOutsideBox,
    DegenerateCenter,
    Direction,
    NoAdversaryInBox,
    NoAdversaryOnRay,
    directional_adversarial,
    nearest_adversarial,
    ray_extent,
)
from .network import Ball, Box, Network, Specification, is_verified, lp_norm, parse_norm

log = logging.getLogger(__name__)

XI_RETRIES = 10
NUDGE_CAP = 60
RESAMPLE_TRIES = 100


class SearchAborted(RuntimeError):
    pass


# --------------------------------------------------------------------------- alpha


@dataclass
class BoundaryPoint:
    point: np.ndarray
    adversarial: bool
    theta: float
    anchor: Optional[int]  # index of the anchor point within the iteration


@dataclass
class AlphaState:
    iteration: int
    center: np.ndarray
    radius: float
    r_old: float
    points: list = field(default_factory=list)
    eps: float = 1e-3

    def next_center(self) -> np.ndarray:
        return np.mean([b.point for b in self.points], axis=0)


def _directional_point(net, spec, c, anchor, theta, p, box, rng, retries, box_as_boundary, notes):
    """Directional boundary point; falls back to the box exit of the last ray tried."""
    last = None
    for attempt in range(retries if theta % 180 and c.size > 1 else 1):
        direction = Direction.sample(c, anchor, theta, rng=rng)
        if c.size == 1 or not np.any(direction.phi != 0):
            # no orthogonal complement: fall back to the collinear direction
            direction = Direction(c, anchor, 0.0, direction.xi)
        try:
            res = directional_adversarial(net, spec, c, direction, p, box)
            return res.point, True
        except NoAdversaryOnRay:
            last = direction
            notes.append(f"no adversary on ray theta={theta} (attempt {attempt + 1})")
    if not box_as_boundary:
        raise SearchAborted(f"no adversary on any ray at theta={theta} from center {c.tolist()}")
    k = ray_extent(c, last.phi, box)
    return c + k * last.phi, False


def levis_alpha(net: Network, spec: Specification, x0, p=np.inf, box: Optional[Box] = None, eps: float = 1e-3,
                max_iter: int = 100, seed=0, box_as_boundary: bool = True, retries: int = XI_RETRIES):
    """Iterative center refinement.

    Each iteration builds d collinear pairs of boundary points: the nearest
    adversary b1 with its partner b2 on the opposite side of c, then for each
    further pair a point orthogonal to the previous pair's first point and its
    own collinear partner. The center moves to the mean of the 2d points. The loop
    ends once the radius at the new center differs from the previous radius by
    less than ``eps``. Rays that leave the box contribute their exit point when
    ``box_as_boundary`` is set.

    Returns ``(Ball, trace)``; trace is a list of AlphaState and the ball is
    exact at the returned center.
    """
    p = parse_norm(p)
    c = np.asarray(x0, dtype=float).copy()
    box = box if box is not None else _require_box(c)
    rng = np.random.default_rng(seed)
    d = c.size
    r_old = 0.0
    trace: list[AlphaState] = []
    notes: list[str] = []
    ball = None
    converged = False
    for it in range(max_iter + 1):
        try:
            cur, _ = nearest_adversarial(net, spec, c, p, box)
        except DegenerateCenter:
            if ball is None:
                raise
            notes.append(f"averaged center {c.tolist()} is adversarial; keeping the previous ball")
            break
        ball = cur
        r = ball.radius
        state = AlphaState(it, c.copy(), r, r_old, eps=eps)
        trace.append(state)
        if it > 0 and abs(r - r_old) < eps:
            converged = True
            break
        if it == max_iter:
            notes.append(f"max_iter {max_iter} reached")
            break
        pts = state.points
        pts.append(BoundaryPoint(ball.witness.copy(), True, math.nan, None))
        step = lambda anchor, theta: _directional_point(net, spec, c, pts[anchor].point, theta, p, box, rng,
                                                        retries, box_as_boundary, notes)
        pts.append(BoundaryPoint(*step(0, 0.0), 0.0, 0))
        for j in range(1, d):
            # pair j: orthogonal to the previous pair's first point, then its collinear partner
            pts.append(BoundaryPoint(*step(2 * j - 2, 90.0), 90.0, 2 * j - 2))
            pts.append(BoundaryPoint(*step(2 * j, 0.0), 0.0, 2 * j))
        c = state.next_center()
        r_old = r
    ball.meta.update(solver="alpha", iterations=len(trace), converged=converged, notes=notes)
    return ball, trace


def _require_box(c):
    from .network import default_box

    return default_box(c.size)


@dataclass
class SymmetryPair:
    first: np.ndarray
    second: np.ndarray
    mismatch: float
    adversarial: tuple
    distances: tuple


def alpha_symmetry(net: Network, spec: Specification, ball: Ball, box: Box, seed=0,
                   retries: int = XI_RETRIES) -> list[SymmetryPair]:
    """Collinear boundary pairs about the ball center, built the same way as one alpha iteration.

    Pair 1 starts at the ball's witness. Box exit points count as boundary
    points and are flagged non-adversarial.
    """
    c = ball.center
    p = ball.p
    rng = np.random.default_rng(seed)
    notes: list[str] = []
    firsts = [(ball.witness.copy(), True)]
    pairs = []
    for j in range(c.size):
        if j:
            firsts.append(_directional_point(net, spec, c, firsts[j - 1][0], 90.0, p, box, rng, retries, True, notes))
        b1, adv1 = firsts[j]
        b2, adv2 = _directional_point(net, spec, c, b1, 0.0, p, box, rng, retries, True, notes)
        pairs.append(SymmetryPair(b1, b2, lp_norm((b1 - c) + (b2 - c), p), (adv1, adv2),
                                  (lp_norm(b1 - c, p), lp_norm(b2 - c, p))))
    return pairs


# --------------------------------------------------------------------------- unions


class BallUnion:
    """Ordered collection of verified balls; entries carry provenance in ``meta``."""

    def __init__(self, balls=None):
        self.balls: list[Ball] = list(balls or [])
        self.notes: list[str] = []

    def __len__(self):
        return len(self.balls)

    def __iter__(self):
        return iter(self.balls)

    def __getitem__(self, i) -> Ball:
        return self.balls[i]

    def add(self, ball: Ball) -> int:
        self.balls.append(ball)
        return len(self.balls) - 1

    def contains(self, x) -> bool:
        return union_contains(self, x)

    def contains_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        hit = np.zeros(X.shape[0], dtype=bool)
        for b in self.balls:
            V = X - b.center
            if b.p == np.inf:
                d = np.abs(V).max(axis=1)
            elif b.p == 1:
                d = np.abs(V).sum(axis=1)
            else:
                d = np.sqrt((V * V).sum(axis=1))
            hit |= d <= b.radius
        return hit

    def validate(self, net: Network, spec: Specification) -> list[int]:
        """Indices of balls whose center is not verified or whose witness is invalid."""
        return [i for i, b in enumerate(self.balls)
                if not is_verified(net, spec, b.center) or not b.check_witness(net, spec)]

    def merge(self, other: "BallUnion", net: Optional[Network] = None, spec: Optional[Specification] = None):
        """Concatenation; with net and spec given, invalid balls are dropped."""
        out = BallUnion(self.balls + other.balls)
        out.notes = self.notes + other.notes
        if net is not None and spec is not None:
            bad = set(out.validate(net, spec))
            out.balls = [b for i, b in enumerate(out.balls) if i not in bad]
        return out

    def to_dict(self, box: Optional[Box] = None, n_samples: int = 100_000, seed=0) -> dict:
        balls = []
        for b in self.balls:
            entry = b.to_dict()
            for key in ("parent", "theta", "delta", "seed"):
                entry[key] = b.meta.get(key)
            balls.append(entry)
        out = {"balls": balls}
        if box is not None:
            out["coverage"] = union_coverage(self, box, n_samples, seed)
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BallUnion":
        balls = []
        for e in data.get("balls", []):
            b = Ball.from_dict(e)
            b.meta.update({k: e.get(k) for k in ("parent", "theta", "delta", "seed")})
            balls.append(b)
        return cls(balls)


def union_contains(union, x) -> bool:
    x = np.asarray(x, dtype=float)
    return any(lp_norm(x - b.center, b.p) <= b.radius for b in union)


def union_coverage(union, box: Box, n_samples: int = 100_000, seed=0) -> float:
    """Monte-Carlo fraction of the box covered by the union."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if len(union) == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    U = union if isinstance(union, BallUnion) else BallUnion(list(union))
    hit = 0
    for s in range(0, n_samples, 1 << 18):
        X = box.sample(rng, min(1 << 18, n_samples - s))
        hit += int(U.contains_batch(X).sum())
    return hit / n_samples


# --------------------------------------------------------------------------- beta


def surface_point(c, b, r: float, gamma: float, p) -> np.ndarray:
    """m = c - gamma (c - b) / ||c - b||_p * r."""
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    n = lp_norm(c - b, parse_norm(p))
    if n == 0:
        raise ValueError("surface point needs b != c")
    return c - gamma * (c - b) / n * r


def _resample(net, spec, union, box, c, rng, tries, start_corner: int):
    """Verified point outside the union from the sub-boxes [l, c] and [c, u], alternating."""
    subs = [Box(box.lower, c), Box(c, box.upper)]
    for t in range(tries):
        sub = subs[(start_corner + t) % 2]
        x = sub.sample(rng, 1)[0]
        if is_verified(net, spec, x) and not union_contains(union, x):
            return x
    return None


def levis_beta(net: Network, spec: Specification, x0, box: Box, eps: float = 1e-3, gamma: float = 0.99,
               delta=0.0, theta: float = 90.0, seed=0, max_balls: int = 30, p=np.inf,
               resample_tries: int = RESAMPLE_TRIES) -> BallUnion:
    """Queue-driven collection of verified balls.

    Centers come from a FIFO queue seeded with x0 + delta. A center with
    radius below ``eps`` (or already covered) is replaced by a verified
    sample from the sub-boxes between it and the box corners. Otherwise its
    ball is recorded and the directional adversary b_hat at ``theta`` gives the
    next center m = surface_point(c, b_hat, r, gamma); m is nudged towards
    b_hat while it lies in the union. Stops when the queue empties or
    ``max_balls`` balls are recorded.
    """
    p = parse_norm(p)
    rng = np.random.default_rng(seed)
    x0 = np.asarray(x0, dtype=float)
    c0 = x0 + np.broadcast_to(np.asarray(delta, dtype=float), x0.shape)
    if not box.contains(c0):
        raise CenterOutsideBox("center outside box")
    delta_list = np.broadcast_to(np.asarray(delta, dtype=float), x0.shape).tolist()
    union = BallUnion()
    queue = deque([(c0, None)])
    corner = 0
    if max_balls <= 0:
        union.notes.append("max_balls reached")
        return union
    while queue:
        if len(union) >= max_balls:
            union.notes.append("max_balls reached (cap added on top of queue exhaustion)")
            break
        c, parent = queue.popleft()
        ball = None
        covered = union_contains(union, c)
        if not covered:
            try:
                ball, _ = nearest_adversarial(net, spec, c, p, box)
            except DegenerateCenter:
                ball = None
            except NoAdversaryInBox:
                far = max(lp_norm(np.where(np.abs(box.lower - c) > np.abs(box.upper - c), box.lower, box.upper) - c, p), 0.0)
                ball = Ball(c, far, p, None, {"whole_box": True})
        if ball is None or ball.radius < eps or covered:
            x = _resample(net, spec, union, box, c, rng, resample_tries, corner)
            corner ^= 1
            if x is None:
                union.notes.append(f"resampling exhausted around {c.tolist()}")
                log.info("resampling exhausted around %s", c)
            else:
                queue.append((x, parent))
            continue
        if not (is_verified(net, spec, c) and ball.check_witness(net, spec)):
            union.notes.append(f"ball at {c.tolist()} failed re-validation")
            continue
        ball.meta.update(parent=parent, theta=theta, delta=delta_list, seed=seed)
        idx = union.add(ball)
        if ball.witness is None:
            continue
        direction = Direction.sample(c, ball.witness, theta, rng=rng)
        if not np.any(direction.phi != 0):
            direction = Direction(c, ball.witness, 0.0, direction.xi)
        try:
            b_hat = directional_adversarial(net, spec, c, direction, p, box).point
        except NoAdversaryOnRay:
            # the box face plays the role of the boundary
            b_hat = c + ray_extent(c, direction.phi, box) * direction.phi
            ball.meta["box_exit"] = True
        m = surface_point(c, b_hat, ball.radius, gamma, p)
        if not box.contains(m):
            union.notes.append(f"branch from ball {idx} ended: surface point outside the box")
            continue
        for _ in range(NUDGE_CAP):
            if not (union_contains(union, m) and lp_norm(m - b_hat, p) > eps):
                break
            m = (m + b_hat) / 2
        queue.append((m, idx))
    return union
