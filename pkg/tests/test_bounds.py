import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levis.bounds import big_m, interval_bounds, lp_tightened_bounds, margin_lower_bound, output_bounds
from levis.fixtures import min_net, random_net
from levis.network import Box, Specification, forward


def test_min_net_bounds_by_hand():
    b = interval_bounds(min_net(), Box([0.0, 0.0], [4.0, 4.0]))
    assert b.lower[0] == pytest.approx([-4.0, 0.0, -4.0])
    assert b.upper[0] == pytest.approx([4.0, 4.0, 0.0])
    lo, hi = output_bounds(min_net(), b)
    assert lo[0] <= 0.0 and hi[0] >= 4.0


@given(st.integers(0, 10_000))
def test_interval_bounds_contain_samples(seed):
    net = random_net(seed, (2, 8, 6, 1))
    rng = np.random.default_rng(seed)
    box = Box.cube(rng.uniform(-1, 1, 2), 1.5)
    b = interval_bounds(net, box)
    X = box.sample(rng, 300)
    for x in X:
        _, pre, _ = forward(net, x)
        for i, z in enumerate(pre):
            assert np.all(z >= b.lower[i] - 1e-9) and np.all(z <= b.upper[i] + 1e-9)


@given(st.integers(0, 10_000))
def test_lp_bounds_tighter_and_sound(seed):
    net = random_net(seed, (2, 6, 6, 1))
    rng = np.random.default_rng(seed)
    box = Box.cube(np.zeros(2), 1.0)
    ib = interval_bounds(net, box)
    lb = lp_tightened_bounds(net, box)
    for i in range(2):
        assert np.all(lb.lower[i] >= ib.lower[i] - 1e-6)
        assert np.all(lb.upper[i] <= ib.upper[i] + 1e-6)
    for x in box.sample(rng, 300):
        _, pre, _ = forward(net, x)
        for i, z in enumerate(pre):
            assert np.all(z >= lb.lower[i] - 1e-6) and np.all(z <= lb.upper[i] + 1e-6)


def test_fixed_phases_contradiction_returns_none():
    net = min_net()
    box = Box([1.0, 1.0], [2.0, 2.0])
    phases = np.array([2, 2, 1], dtype=np.int8)  # neuron 3 computes -x1 < 0 everywhere
    assert interval_bounds(net, box, phases) is None


def test_margin_lower_bound_is_sound():
    net = min_net()
    box = Box([1.0, 1.0], [3.0, 3.0])
    b = interval_bounds(net, box)
    lb = margin_lower_bound(net, np.array([1.0]), 0.0, b)
    assert lb <= 1.0
    M_lo, M_hi = big_m(b)
    assert M_lo == pytest.approx([2.0, 0.0, 3.0])
    assert M_hi == pytest.approx([2.0, 3.0, 0.0])
