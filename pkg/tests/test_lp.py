from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levis.lp import EQ, GE, LE, LinearProgram, LpStalled, available_backends, solve_lp
from rational import lp_by_vertices

BACKENDS = available_backends()


def _random_small_lp(rng, n=None, m=None, with_eq=False):
    n = n or int(rng.integers(1, 4))
    m = m or int(rng.integers(1, 5))
    A = rng.integers(-5, 6, (m, n))
    b = rng.integers(-6, 10, m)
    senses = rng.choice([LE, GE], m)
    if with_eq:
        senses[0] = EQ
    c = rng.integers(-5, 6, n)
    lb = rng.integers(-4, 1, n)
    ub = lb + rng.integers(1, 6, n)
    return c, A, senses, b, lb, ub


def _check_certificate(lp, out, tol=1e-7):
    """Stationarity plus sign conditions on reduced costs and row duals."""
    assert np.allclose(lp.c, lp.A.T @ out.duals + out.reduced_costs, atol=1e-8)
    x, d = out.x, out.reduced_costs
    scale = 1 + np.abs(x).max()
    for j in range(lp.n_vars):
        if d[j] > tol:
            assert x[j] <= lp.lb[j] + tol * scale
        elif d[j] < -tol:
            assert x[j] >= lp.ub[j] - tol * scale
    ax = lp.A @ x
    for i, (s, y) in enumerate(zip(lp.senses, out.duals)):
        if y > tol:
            assert s in (GE, EQ) and abs(ax[i] - lp.b[i]) <= tol * (1 + abs(lp.b[i]))
        elif y < -tol:
            assert s in (LE, EQ) and abs(ax[i] - lp.b[i]) <= tol * (1 + abs(lp.b[i]))


@pytest.mark.parametrize("backend", BACKENDS)
def test_textbook_lp(backend):
    # max 3x + 2y s.t. x + y <= 4, x + 3y <= 6, x <= 3
    lp = LinearProgram([-3, -2], [[1, 1], [1, 3]], ["<=", "<="], [4, 6], [0, 0], [3, np.inf])
    out = solve_lp(lp, backend=backend)
    assert out.optimal
    assert out.objective == pytest.approx(-11.0)
    assert out.x == pytest.approx([3.0, 1.0])
    _check_certificate(lp, out)


@pytest.mark.parametrize("backend", BACKENDS)
def test_infeasible_and_unbounded(backend):
    infeasible = LinearProgram([1, 1], [[1, 1], [1, 1]], [">=", "<="], [3, 1], [0, 0], [5, 5])
    assert solve_lp(infeasible, backend=backend).status == "infeasible"
    unbounded = LinearProgram([-1, 0], [[1, -1]], [">="], [0], [0, 0], [np.inf, np.inf])
    assert solve_lp(unbounded, backend=backend).status == "unbounded"


@pytest.mark.parametrize("backend", BACKENDS)
def test_free_variables_and_equalities(backend):
    # x free: x = 1 - y - z, objective 1 + y - 2z, best at y = 0, z = 2
    lp = LinearProgram([1, 2, -1], [[1, 1, 1], [1, -1, 0]], ["=", ">="], [1, -2], [-np.inf, 0, 0], [np.inf, np.inf, 2])
    out = solve_lp(lp, backend=backend)
    assert out.optimal
    assert out.objective == pytest.approx(-3.0)
    assert out.x == pytest.approx([-1.0, 0.0, 2.0])
    assert lp.violation(out.x) < 1e-9
    _check_certificate(lp, out)


def test_nan_rejected():
    with pytest.raises(ValueError):
        LinearProgram([np.nan], [[1.0]], ["<="], [1.0], [0.0], [1.0])


def test_pivot_cap_raises():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((20, 30))
    lp = LinearProgram(rng.standard_normal(30), A, ["<="] * 20, np.abs(A).sum(1), -np.ones(30), np.ones(30))
    with pytest.raises(LpStalled):
        solve_lp(lp, max_pivots=1)


@pytest.mark.parametrize("backend", BACKENDS)
def test_matches_rational_vertex_enumeration(backend):
    rng = np.random.default_rng(7)
    for k in range(60):
        c, A, senses, b, lb, ub = _random_small_lp(rng, with_eq=k % 5 == 0)
        ref = lp_by_vertices(c, A.tolist(), senses.tolist(), b, lb.tolist(), ub.tolist())
        lp = LinearProgram(c, A, senses, b, lb, ub)
        out = solve_lp(lp, backend=backend)
        if ref is None:
            assert out.status == "infeasible"
        else:
            assert out.optimal
            assert out.objective == pytest.approx(float(ref[0]), abs=1e-6)
            _check_certificate(lp, out)


@given(st.integers(0, 10**6))
def test_backends_agree(seed):
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernel not built")
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 12)), int(rng.integers(1, 10))
    A = rng.standard_normal((m, n))
    x = rng.uniform(-1, 1, n)
    lp = LinearProgram(rng.standard_normal(n), A, rng.choice([LE, GE], m),
                       A @ x + rng.normal(0, 0.5, m), -2 * np.ones(n), 2 * np.ones(n))
    a, b = solve_lp(lp, backend="python"), solve_lp(lp, backend="compiled")
    assert a.status == b.status
    if a.optimal:
        assert a.objective == pytest.approx(b.objective, abs=1e-7)


@given(st.integers(0, 10**6))
def test_optimum_feasible_and_not_beaten_by_samples(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
    A = rng.standard_normal((m, n))
    x0 = rng.uniform(-1, 1, n)
    lp = LinearProgram(rng.standard_normal(n), A, ["<="] * m, A @ x0 + 0.1, -np.ones(n), np.ones(n))
    out = solve_lp(lp)
    assert out.optimal
    assert lp.violation(out.x) <= 1e-7
    X = rng.uniform(-1, 1, (500, n))
    feas = X[(X @ A.T <= lp.b).all(axis=1)]
    if len(feas):
        assert (feas @ lp.c).min() >= out.objective - 1e-9
