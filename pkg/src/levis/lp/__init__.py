"""Dense bounded-variable primal simplex.

The pivoting loop lives in a compiled extension when it is available and
falls back to an equivalent numpy loop otherwise. Set ``LEVIS_PURE_PYTHON=1``
to force the fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _simplex_py

try:
    if os.environ.get("LEVIS_PURE_PYTHON"):
        raise ImportError("pure python requested")
    from . import _simplex_core as _compiled
except ImportError:  # pragma: no cover - depends on build
    _compiled = None

LE, EQ, GE = -1, 0, 1
_SENSES = {"<=": LE, "<": LE, "L": LE, "=": EQ, "==": EQ, "E": EQ, ">=": GE, ">": GE, "G": GE,
           LE: LE, EQ: EQ, GE: GE}

FEAS_TOL = 1e-7
OPT_TOL = 1e-8
PIV_TOL = 1e-9
MAX_PIVOTS = 10**6
BLAND_AFTER = 5000
REFACTOR_EVERY = 100


class LpStalled(RuntimeError):
    """Pivot cap reached before the simplex terminated."""


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def default_backend() -> str:
    return "compiled" if _compiled is not None else "python"


def _kernel(backend: Optional[str]):
    backend = backend or default_backend()
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled simplex kernel is not built; run `pip install -e .`")
        return _compiled.run_simplex
    if backend == "python":
        return _simplex_py.run_simplex
    raise ValueError(f"unknown backend {backend!r}")


@dataclass
class LinearProgram:
    """min c.x  s.t.  A x (sense) b,  lb <= x <= ub."""

    c: np.ndarray
    A: np.ndarray
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.shape[0]
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        m = self.A.shape[0]
        self.senses = np.array([_SENSES[s] for s in np.atleast_1d(self.senses)], dtype=int).reshape(m)
        self.b = np.asarray(self.b, dtype=float).reshape(m)
        self.lb = np.broadcast_to(np.asarray(self.lb, dtype=float), (n,)).copy()
        self.ub = np.broadcast_to(np.asarray(self.ub, dtype=float), (n,)).copy()
        for name in ("c", "A", "b", "lb", "ub"):
            if np.any(np.isnan(getattr(self, name))):
                raise ValueError(f"NaN in LP {name}")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("LP data must be finite (bounds may be infinite)")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def violation(self, x) -> float:
        """Largest constraint or bound violation at x."""
        x = np.asarray(x, dtype=float)
        ax = self.A @ x
        viol = np.zeros(self.n_rows)
        viol = np.where(self.senses == LE, ax - self.b, viol)
        viol = np.where(self.senses == GE, self.b - ax, viol)
        viol = np.where(self.senses == EQ, np.abs(ax - self.b), viol)
        worst = max(viol.max(initial=0.0), (self.lb - x).max(initial=0.0), (x - self.ub).max(initial=0.0))
        return float(max(worst, 0.0))


@dataclass
class LpOutcome:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    pivots: int = 0
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    """Working state: columns are structurals, row logicals r = A x, then artificials."""

    def __init__(self, lp: LinearProgram):
        m, n = lp.n_rows, lp.n_vars
        self.m, self.n = m, n
        rlo = np.where(lp.senses == GE, lp.b, -np.inf)
        rlo = np.where(lp.senses == EQ, lp.b, rlo)
        rhi = np.where(lp.senses == LE, lp.b, np.inf)
        rhi = np.where(lp.senses == EQ, lp.b, rhi)

        xn = np.where(np.isfinite(lp.lb), lp.lb, np.where(np.isfinite(lp.ub), lp.ub, 0.0))
        act = lp.A @ xn
        below = act < rlo - FEAS_TOL
        above = act > rhi + FEAS_TOL
        need = below | above
        arts = np.flatnonzero(need)
        k = arts.shape[0]
        self.n_art = k

        # M = [A, -I, E_art]; artificial column sign makes its value |violation|
        M = np.zeros((m, n + m + k))
        M[:, :n] = lp.A
        M[np.arange(m), n + np.arange(m)] = -1.0
        target = np.where(below, rlo, rhi)
        sigma = np.where(act[arts] > target[arts], -1.0, 1.0)
        M[arts, n + m + np.arange(k)] = sigma
        self.M = M

        self.lb = np.concatenate([lp.lb, rlo, np.zeros(k)])
        self.ub = np.concatenate([lp.ub, rhi, np.full(k, np.inf)])
        x = np.zeros(n + m + k)
        x[:n] = xn
        logical = act.copy()
        logical[arts] = target[arts]
        x[n : n + m] = logical
        x[n + m :] = np.abs(act[arts] - target[arts])
        self.x = x

        basis = n + np.arange(m)
        basis[arts] = n + m + np.arange(k)
        self.basis = basis.astype(np.int_)
        self.where = np.full(n + m + k, -1, dtype=np.int_)
        self.where[self.basis] = np.arange(m)
        diag = M[np.arange(m), self.basis]
        self.T = np.ascontiguousarray(M / diag[:, None])
        self.cost = np.zeros(n + m + k)
        self._probe = np.linspace(1.0, 2.0, n + m + k)

    def set_cost(self, cost):
        self.cost = cost
        self.d = cost - cost[self.basis] @ self.T

    def refactor(self):
        B = self.M[:, self.basis]
        self.T = np.ascontiguousarray(np.linalg.solve(B, self.M))
        nb = self.where < 0
        self.x[self.basis] = -(self.T[:, nb] @ self.x[nb])
        self.d = self.cost - self.cost[self.basis] @ self.T
        self.d[self.basis] = 0.0

    def drift(self) -> float:
        """Cheap consistency probe of the tableau, basic values and reduced costs."""
        probe = self._probe
        B = self.M[:, self.basis]
        scale = 1.0 + np.abs(self.M).max()
        err_t = np.abs(B @ (self.T @ probe) - self.M @ probe).max(initial=0.0) / (scale * probe.size)
        err_x = np.abs(self.M @ self.x).max(initial=0.0) / (scale * (1.0 + np.abs(self.x).max(initial=0.0)))
        d_ref = self.cost - self.cost[self.basis] @ self.T
        d_ref[self.basis] = 0.0
        err_d = np.abs(d_ref - self.d).max(initial=0.0) / (1.0 + np.abs(self.cost).max(initial=0.0))
        return max(err_t, err_x, err_d)


DRIFT_TOL = 1e-10


def _run(tab: _Tableau, kernel, state: dict, max_pivots: int) -> int:
    while True:
        status, piv, state["degenerate"] = kernel(
            tab.T, tab.x, tab.d, tab.lb, tab.ub, tab.basis, tab.where,
            max_pivots - state["pivots"], BLAND_AFTER, state["degenerate"], REFACTOR_EVERY,
            OPT_TOL, PIV_TOL, FEAS_TOL,
        )
        state["pivots"] += piv
        if status == _simplex_py.REFACTOR:
            if tab.drift() > DRIFT_TOL:
                tab.refactor()
            continue
        if status == _simplex_py.LIMIT:
            raise LpStalled(f"simplex stalled after {state['pivots']} pivots")
        if status == _simplex_py.OPTIMAL and state["pivots"] > state.get("last_refactor", -1):
            # re-verify on a freshly factored basis when the updated tableau has drifted
            state["last_refactor"] = state["pivots"]
            if tab.drift() > DRIFT_TOL:
                tab.refactor()
                continue
        return status


def solve_lp(lp: LinearProgram, backend: Optional[str] = None, max_pivots: int = MAX_PIVOTS) -> LpOutcome:
    """Two-phase primal simplex. Raises LpStalled at the pivot cap."""
    kernel = _kernel(backend)
    tab = _Tableau(lp)
    n, m, k = tab.n, tab.m, tab.n_art
    state = {"pivots": 0, "degenerate": 0}

    if k:
        phase1 = np.zeros(n + m + k)
        phase1[n + m :] = 1.0
        tab.set_cost(phase1)
        _run(tab, kernel, state, max_pivots)
        infeas = tab.x[n + m :].sum()
        if infeas > FEAS_TOL * max(1.0, k):
            return LpOutcome("infeasible", pivots=state["pivots"], info={"phase1_residual": float(infeas)})
        tab.ub[n + m :] = 0.0
        tab.x[n + m :] = np.where(tab.where[n + m :] < 0, 0.0, tab.x[n + m :])
        state.pop("last_refactor", None)

    cost = np.zeros(n + m + k)
    cost[:n] = lp.c
    tab.set_cost(cost)
    status = _run(tab, kernel, state, max_pivots)
    if status == _simplex_py.UNBOUNDED:
        return LpOutcome("unbounded", pivots=state["pivots"])

    x = tab.x[:n].copy()
    x = np.clip(x, lp.lb, lp.ub)
    viol = lp.violation(x)
    if viol > 10 * FEAS_TOL * max(1.0, np.abs(x).max(initial=0.0)):
        return LpOutcome("infeasible", pivots=state["pivots"], info={"residual": viol})
    return LpOutcome(
        "optimal",
        x=x,
        objective=float(lp.c @ x),
        duals=tab.d[n : n + m].copy(),
        reduced_costs=tab.d[:n].copy(),
        pivots=state["pivots"],
        info={"max_violation": viol},
    )
