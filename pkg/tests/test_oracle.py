import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levis.fixtures import identity_net, min_net, random_verified_case
from levis.milp import nearest_adversarial
from levis.network import Ball, Box, Specification
from levis.oracle import (
    NotFound,
    grid_oracle_nearest,
    induced_norm,
    lipschitz_constant,
    lipschitz_radius,
    ray_oracle,
    sample_ball,
    soundness_sample,
)

POS = Specification.positive(1)
BOX5 = Box([-5.0, -5.0], [5.0, 5.0])


def test_grid_min_net():
    rep = grid_oracle_nearest(min_net(), POS, [2.0, 1.0], np.inf, BOX5, 1e-3)
    assert abs(rep.distance - 1.0) <= 1e-3
    assert min(rep.point) <= 0


def test_grid_identity():
    rep = grid_oracle_nearest(identity_net(), POS, [1.0], np.inf, Box([-2.0], [2.0]), 1e-4)
    assert abs(rep.distance - 1.0) <= 1e-4


def test_grid_not_found():
    spec = Specification.from_constraints([(np.array([1.0]), 1e6)])
    with pytest.raises(NotFound):
        grid_oracle_nearest(min_net(), spec, [0.5, 0.5], np.inf, Box([0.0, 0.0], [1.0, 1.0]), 1e-2)


def test_grid_rejects_bad_input():
    with pytest.raises(ValueError):
        grid_oracle_nearest(min_net(), POS, [2.0, 1.0], np.inf, BOX5, 0.0)


@pytest.mark.parametrize("phi, k", [((0.0, -1.0), 1.0), ((-1.0, 0.0), 2.0)])
def test_ray_examples(phi, k):
    rep = ray_oracle(min_net(), POS, [2.0, 1.0], phi, Box([0.0, 0.0], [5.0, 5.0]) if k == 2 else BOX5, 1e-4)
    assert abs(rep.distance - k) <= 1e-4


def test_ray_not_found():
    with pytest.raises(NotFound):
        ray_oracle(min_net(), POS, [2.0, 1.0], (1.0, 0.0), Box([0.0, 0.0], [5.0, 5.0]), 1e-4)
    with pytest.raises(ValueError):
        ray_oracle(min_net(), POS, [2.0, 1.0], (0.0, 0.0), BOX5, 1e-4)


@pytest.mark.parametrize("p", [1, 2, np.inf])
def test_exact_balls_are_sound(p):
    ball, _ = nearest_adversarial(min_net(), POS, [2.0, 1.0], p, BOX5)
    assert soundness_sample(min_net(), POS, ball, 10_000).n_violations == 0


def test_inflated_ball_is_caught():
    ball, _ = nearest_adversarial(min_net(), POS, [2.0, 1.0], np.inf, BOX5)
    rep = soundness_sample(min_net(), POS, Ball(ball.center, 1.5 * ball.radius, np.inf), 10_000)
    assert rep.n_violations >= 1
    for v in rep.violations:
        assert min(v) <= 0


def test_zero_radius_ball():
    rep = soundness_sample(min_net(), POS, Ball([2.0, 1.0], 0.0, 2), 100)
    assert rep.n_violations == 0


def test_sampling_deterministic():
    a = sample_ball(np.random.default_rng(5), [0.0, 0.0], 1.0, 1, 100)
    b = sample_ball(np.random.default_rng(5), [0.0, 0.0], 1.0, 1, 100)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("p", [1, 2, np.inf])
@pytest.mark.parametrize("d", [2, 6])
def test_samples_stay_in_ball(p, d):
    X = sample_ball(np.random.default_rng(0), np.zeros(d), 2.0, p, 2000)
    ord_ = {1: 1, 2: 2, np.inf: np.inf}[p]
    assert np.all(np.linalg.norm(X, ord=ord_, axis=1) <= 2.0 + 1e-12)


def test_lipschitz_identity():
    net = identity_net()
    assert lipschitz_constant(net, np.inf) == 2.0
    assert lipschitz_radius(net, POS, [1.0], np.inf) == 0.5


@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 6))
def test_power_iteration(seed, m, n):
    W = np.random.default_rng(seed).standard_normal((m, n))
    assert induced_norm(W, 2) == pytest.approx(np.linalg.norm(W, 2), rel=1e-6)
    assert induced_norm(W, np.inf) == pytest.approx(np.linalg.norm(W, np.inf))
    assert induced_norm(W, 1) == pytest.approx(np.linalg.norm(W, 1))


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.sampled_from([1, 2, np.inf]))
def test_lipschitz_below_exact(seed, p):
    net, spec, c, box = random_verified_case(seed, (2, 8, 1))
    r_exact = nearest_adversarial(net, spec, c, p, box)[0].radius
    assert 0 <= lipschitz_radius(net, spec, c, p) <= r_exact + 1e-9


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_grid_refinement(seed):
    net, spec, c, box = random_verified_case(seed, (2, 8, 1))
    coarse = grid_oracle_nearest(net, spec, c, np.inf, box, 2e-2).distance
    fine = grid_oracle_nearest(net, spec, c, np.inf, box, 1e-2).distance
    assert fine <= coarse + 2e-2


@pytest.mark.parametrize("p", [1, 2, np.inf])
def test_region_distance_constant_output_row(p):
    # all neurons off: the output is the constant 0, so the output row of the region is all zeros
    from levis.network import ActivationPattern
    from levis.oracle import region_distance

    net, box = identity_net(), Box([-2.0], [2.0])
    off = ActivationPattern(np.zeros(2, dtype=np.int8), net.hidden_sizes)
    assert region_distance(net, [1.0], 0.0, off, [1.0], p, box) == pytest.approx(1.0, abs=1e-9)
    assert region_distance(net, [1.0], 1.0, off, [1.0], p, box) == np.inf
