import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levis.bounds import interval_bounds
from levis.fixtures import identity_net, min_net, random_verified_case
from levis.milp import (
    CenterOutsideBox,
    DegenerateCenter,
    Direction,
    NoAdversaryInBox,
    NoAdversaryOnRay,
    _SingleConstraintSearch,
    directional_adversarial,
    make_witness,
    nearest_adversarial,
)
from levis.network import ActivationPattern, Box, Phase, Specification, is_verified, lp_norm
from levis.oracle import grid_oracle_nearest, ray_oracle, region_distance

POS = Specification.positive(1)
BOX5 = Box([-5.0, -5.0], [5.0, 5.0])


@pytest.mark.parametrize("p", [np.inf, 1, 2])
def test_min_net_radius_one(p):
    ball, pattern = nearest_adversarial(min_net(), POS, [2.0, 1.0], p, BOX5)
    assert ball.radius == pytest.approx(1.0, abs=1e-7)
    assert ball.check_witness(min_net(), POS)
    assert pattern.determined


def test_min_net_witness_l1_is_unique():
    ball, _ = nearest_adversarial(min_net(), POS, [2.0, 1.0], 1, BOX5)
    assert ball.witness == pytest.approx([2.0, 0.0], abs=1e-6)


@pytest.mark.parametrize("p", [np.inf, 1, 2])
def test_identity_net(p):
    ball, _ = nearest_adversarial(identity_net(), POS, [1.0], p, Box([-5.0], [5.0]))
    assert ball.radius == pytest.approx(1.0, abs=1e-9)
    assert ball.witness == pytest.approx([0.0], abs=1e-7)


def test_degenerate_center():
    with pytest.raises(DegenerateCenter) as info:
        nearest_adversarial(min_net(), POS, [-1.0, 3.0], np.inf, BOX5)
    assert info.value.ball.radius == 0.0
    assert info.value.ball.witness == pytest.approx([-1.0, 3.0])


def test_center_outside_box():
    with pytest.raises(CenterOutsideBox, match="center outside box"):
        nearest_adversarial(min_net(), POS, [9.0, 1.0], np.inf, BOX5)


def test_fully_verified_box():
    with pytest.raises(NoAdversaryInBox):
        nearest_adversarial(min_net(), POS, [2.0, 2.0], np.inf, Box([1.0, 1.0], [3.0, 3.0]))


def test_multi_constraint_spec_takes_minimum():
    # 1 < f(x) < 4 around c = (2, 2.5): lower side at distance 1, upper side at distance 1.5
    spec = Specification.output_limits([1.0], [4.0])
    ball, _ = nearest_adversarial(min_net(), spec, [2.0, 2.5], np.inf, BOX5)
    assert ball.radius == pytest.approx(1.0, abs=1e-7)
    assert not is_verified(min_net(), spec, ball.witness)


def test_make_witness_nudges_boundary_points():
    net = min_net()
    c = np.array([2.0, 1.0])
    x = np.array([2.0, 1e-14])
    w = make_witness(net, np.array([1.0]), 0.0, c, x)
    assert w is not None and not is_verified(net, POS, w)
    assert lp_norm(w - x, np.inf) < 1e-6


# --------------------------------------------------------------------------- directions


def test_direction_algebra():
    rng = np.random.default_rng(0)
    for _ in range(50):
        c, b = rng.normal(size=4), rng.normal(size=4)
        theta = rng.uniform(0, 360)
        dr = Direction.sample(c, b, theta, rng=rng)
        assert abs(dr.q @ dr.d) <= 1e-10 * (1 + np.linalg.norm(dr.q))
        assert np.abs(dr.d).max() == pytest.approx(1.0)
    dr0 = Direction(c, b, 0.0, rng.normal(size=4))
    assert np.array_equal(dr0.phi, dr0.d)
    dr90 = Direction(c, b, 90.0, rng.normal(size=4))
    assert abs(dr90.phi @ dr90.d) <= 1e-10


def test_direction_rejects_anchor_at_center():
    with pytest.raises(ValueError):
        Direction([1.0, 1.0], [1.0, 1.0], 90.0, [1.0, 0.0])


BOX05 = Box([0.0, 0.0], [5.0, 5.0])


def test_direction_orthogonal_hits_left_axis():
    dr = Direction([2.0, 1.0], [2.0, 0.0], 90.0, [-1.0, 0.0])
    assert dr.phi == pytest.approx([-1.0, 0.0])
    res = directional_adversarial(min_net(), POS, [2.0, 1.0], dr, np.inf, BOX05)
    assert res.k == pytest.approx(2.0, abs=1e-7)
    assert res.point == pytest.approx([0.0, 1.0], abs=1e-7)
    assert res.distance == pytest.approx(2.0, abs=1e-7)
    assert lp_norm(res.point - (np.array([2.0, 1.0]) + res.k * dr.phi), np.inf) <= 1e-8


def test_direction_orthogonal_verified_side():
    dr = Direction([2.0, 1.0], [2.0, 0.0], 90.0, [1.0, 0.0])
    with pytest.raises(NoAdversaryOnRay):
        directional_adversarial(min_net(), POS, [2.0, 1.0], dr, np.inf, BOX05)


def test_direction_zero_degrees_points_away_from_anchor():
    # phi(0) = d = (c - b)/||c - b|| leads away from b; the ray stays verified
    dr = Direction([2.0, 1.0], [2.0, 0.0], 0.0, [0.3, 0.7])
    assert dr.phi == pytest.approx([0.0, 1.0])
    with pytest.raises(NoAdversaryOnRay):
        directional_adversarial(min_net(), POS, [2.0, 1.0], dr, np.inf, BOX05)


def test_direction_half_turn_recovers_anchor():
    dr = Direction([2.0, 1.0], [2.0, 0.0], 180.0, [0.3, 0.7])
    res = directional_adversarial(min_net(), POS, [2.0, 1.0], dr, np.inf, BOX05)
    assert res.point == pytest.approx([2.0, 0.0], abs=1e-7)
    assert res.k == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("p", [1, 2, np.inf])
def test_direction_distance_uses_norm(p):
    dr = Direction([2.0, 1.0], [1.0, 0.0], 180.0, [0.0, 0.0])
    res = directional_adversarial(min_net(), POS, [2.0, 1.0], dr, p, BOX05)
    assert res.distance == pytest.approx(res.k * lp_norm(dr.phi, p))


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.floats(0, 360))
def test_direction_matches_ray_scan(seed, theta):
    net, spec, c, box = random_verified_case(seed, (2, 8, 1))
    rng = np.random.default_rng(seed)
    dr = Direction.sample(c, c + rng.normal(size=2), theta, rng=rng)
    if not np.any(np.abs(dr.phi) > 1e-6):
        return
    step = 1e-4 * float(np.abs(dr.phi).max()) ** -1
    try:
        res = directional_adversarial(net, spec, c, dr, np.inf, box)
    except NoAdversaryOnRay:
        with pytest.raises(Exception):
            ray_oracle(net, spec, c, dr.phi, box, step)
        return
    scan = ray_oracle(net, spec, c, dr.phi, box, step)
    assert res.k <= scan.distance + 1e-9
    assert res.k >= scan.distance - step - 1e-9


# --------------------------------------------------------------------------- oracles


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("p", [np.inf, 1, 2])
def test_random_nets_match_grid(seed, p):
    net, spec, c, box = random_verified_case(100 + seed, (2, 10, 1))
    ball, _ = nearest_adversarial(net, spec, c, p, box)
    grid = grid_oracle_nearest(net, spec, c, p, box, 2e-3)
    assert abs(ball.radius - grid.distance) <= 4e-3
    assert ball.radius <= grid.distance + 1e-9


def _subtree_optimum(net, spec, c, p, box, phases):
    """Exact optimum over every completion of a partial pattern."""
    bounds = interval_bounds(net, box)
    base = phases.copy()
    free = np.flatnonzero(base == Phase.FREE)
    best = math.inf
    for bits in itertools.product((Phase.INACTIVE, Phase.ACTIVE), repeat=free.size):
        ph = base.copy()
        ph[free] = bits
        pat = ActivationPattern(ph, net.hidden_sizes)
        best = min(best, region_distance(net, spec.A[0], spec.b[0], pat, c, p, box))
    return best


@pytest.mark.parametrize("seed", range(3))
def test_l2_pruning_bounds_are_valid(seed):
    """Every pruned node's relaxation value underestimates the true subtree optimum."""
    net, spec, c, box = random_verified_case(200 + seed, (2, 6, 1))
    search = _SingleConstraintSearch(net, spec.A[0], spec.b[0], c, 2.0, box, record_pruned=True)
    found, stats = search.run()
    assert found is not None
    for value, phases, ub in stats.pruned_bounds:
        true = _subtree_optimum(net, spec, c, 2.0, box, phases)
        assert value <= true + 1e-7 or true >= ub * (1 - 1e-7)


@pytest.mark.parametrize("p", [np.inf, 2])
def test_workers_give_identical_results(p):
    net, spec, c, box = random_verified_case(5, (2, 16, 1))
    a, _ = nearest_adversarial(net, spec, c, p, box)
    b, _ = nearest_adversarial(net, spec, c, p, box, workers=3)
    assert a.radius == b.radius
    assert np.array_equal(a.witness, b.witness)


def test_search_stats_lower_bound_consistent():
    net, spec, c, box = random_verified_case(9, (2, 12, 1))
    ball, _ = nearest_adversarial(net, spec, c, np.inf, box)
    stats = ball.meta["stats"]
    assert stats.lower_bound <= ball.radius + 1e-9
    assert stats.worst_prune_slack >= -1e-7 * max(1.0, ball.radius)
