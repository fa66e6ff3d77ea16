"""Small networks and boxes used by tests, benchmarks and the CLI demos."""
from __future__ import annotations

import numpy as np

from .network import Box, Network, Specification


def min_net() -> Network:
    """f(x) = min(x1, x2) = x1 - relu(x1 - x2), written with three ReLUs."""
    return Network(
        [[[1.0, -1.0], [1.0, 0.0], [-1.0, 0.0]], [[-1.0, 1.0, -1.0]]],
        [[0.0, 0.0, 0.0], [0.0]],
    )


def identity_net() -> Network:
    """f(x) = relu(x) - relu(-x) = x on the real line."""
    return Network([[[1.0], [-1.0]], [[1.0, -1.0]]], [[0.0, 0.0], [0.0]])


def positive_spec(dim: int = 1) -> Specification:
    return Specification.positive(dim)


def random_net(seed: int, sizes=(2, 8, 1), scale: float = 1.0) -> Network:
    """Gaussian weights scaled by 1/sqrt(fan_in); biases keep a fraction of neurons unstable near 0."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.standard_normal((fan_out, fan_in)) * scale / np.sqrt(fan_in))
        biases.append(rng.standard_normal(fan_out) * 0.5 * scale)
    return Network(weights, biases)


def random_verified_case(seed: int, sizes=(2, 8, 1), half_width: float = 2.0, max_tries: int = 200):
    """(net, spec, center, box) with a verified center and an adversary inside the box.

    The output bias is shifted so that f(center) = 0.5 and the spec is f > 0.
    """
    rng = np.random.default_rng(seed)
    for attempt in range(max_tries):
        net = random_net(int(rng.integers(2**31)), sizes)
        c = rng.uniform(-0.5, 0.5, sizes[0])
        shift = 0.5 - float(net(c)[0])
        net = Network(net.weights, list(net.biases[:-1]) + [net.biases[-1] + shift])
        box = Box.cube(c, half_width)
        corners = box.sample(rng, 2000)
        if np.any(net.batch(corners)[:, 0] <= 0):
            return net, Specification.positive(1), c, box
    raise RuntimeError("could not build a fixture with an adversary in the box")


def polygon_net(vertices) -> tuple[Network, Specification]:
    """Identity-like 2-D net whose verified set is the open convex polygon with the given vertices.

    Vertices are listed counter-clockwise; each edge becomes one constraint.
    """
    V = np.asarray(vertices, dtype=float)
    net = Network([[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]], [[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]]],
                  [[0.0] * 4, [0.0, 0.0]])
    rows = []
    for i in range(len(V)):
        p, q = V[i], V[(i + 1) % len(V)]
        e = q - p
        n = np.array([-e[1], e[0]])  # inward normal for ccw order
        rows.append((n, -float(n @ p)))
    return net, Specification.from_constraints(rows)


CONVEX_POLYGONS = {
    "square": [(0, 0), (4, 0), (4, 4), (0, 4)],
    "rectangle": [(0, 0), (6, 0), (6, 2), (0, 2)],
    "diamond": [(2, 0), (4, 2), (2, 4), (0, 2)],
    "triangle": [(0, 0), (6, 0), (0, 6)],
}
