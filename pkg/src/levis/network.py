"""Feed-forward ReLU networks, output specifications and input geometry."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class Phase(enum.IntEnum):
    INACTIVE = 0
    ACTIVE = 1
    FREE = 2


def _as_vec(v, name="vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def lp_norm(v: np.ndarray, p) -> float:
    """Vector norm for p in {1, 2, inf}."""
    v = np.asarray(v, dtype=float)
    p = parse_norm(p)
    if p == 1:
        return float(np.abs(v).sum())
    if p == 2:
        return float(np.sqrt(np.dot(v, v)))
    return float(np.abs(v).max()) if v.size else 0.0


def parse_norm(p) -> float:
    if isinstance(p, str):
        key = p.strip().lower()
        if key in ("inf", "infinity", "linf", "max"):
            return np.inf
        p = float(key)
    if p == 1 or p == 2 or p == np.inf:
        return float(p)
    raise ValueError(f"norm order must be 1, 2 or inf, got {p!r}")


def norm_label(p) -> str:
    p = parse_norm(p)
    return "inf" if p == np.inf else str(int(p))


class Network:
    """Affine/ReLU stack. Every layer except the last applies ReLU."""

    def __init__(self, weights: Sequence, biases: Sequence):
        if len(weights) != len(biases):
            raise ValueError("weights and biases must have the same length")
        if len(weights) < 2:
            raise ValueError("a network needs at least one hidden layer and one output layer")
        Ws, bs = [], []
        for i, (W, b) in enumerate(zip(weights, biases)):
            W = np.array(W, dtype=float, ndmin=2)
            b = _as_vec(b, f"bias {i}").copy()
            if W.shape[0] != b.shape[0]:
                raise ValueError(f"layer {i}: weight has {W.shape[0]} rows but bias has {b.shape[0]}")
            if Ws and W.shape[1] != Ws[-1].shape[0]:
                raise ValueError(
                    f"layer {i}: expects {W.shape[1]} inputs but layer {i - 1} has {Ws[-1].shape[0]} outputs"
                )
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i}: non-finite parameters")
            W.setflags(write=False)
            b.setflags(write=False)
            Ws.append(W)
            bs.append(b)
        self.weights = tuple(Ws)
        self.biases = tuple(bs)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def hidden_sizes(self) -> list[int]:
        return [W.shape[0] for W in self.weights[:-1]]

    @property
    def n_hidden(self) -> int:
        return sum(self.hidden_sizes)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def neuron_index(self) -> list[tuple[int, int]]:
        """(layer, unit) for each hidden neuron, in flat order."""
        return [(i, j) for i, n in enumerate(self.hidden_sizes) for j in range(n)]

    def __call__(self, x) -> np.ndarray:
        return forward(self, x)[0]

    def __eq__(self, other):
        if not isinstance(other, Network) or self.n_layers != other.n_layers:
            return NotImplemented
        return all(
            W1.shape == W2.shape and np.array_equal(W1, W2) and np.array_equal(b1, b2)
            for W1, W2, b1, b2 in zip(self.weights, other.weights, self.biases, other.biases)
        )

    def __repr__(self):
        dims = [self.input_dim] + self.hidden_sizes + [self.output_dim]
        return f"Network({'x'.join(map(str, dims))})"

    def batch(self, X: np.ndarray) -> np.ndarray:
        """Outputs for a (n, d0) array of inputs."""
        h = np.asarray(X, dtype=float)
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ W.T + b, 0.0)
        return h @ self.weights[-1].T + self.biases[-1]

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "layers": [{"weight": W.tolist(), "bias": b.tolist()} for W, b in zip(self.weights, self.biases)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Network":
        try:
            layers = data["layers"]
            net = cls([ly["weight"] for ly in layers], [ly["bias"] for ly in layers])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed network description: missing or invalid {exc}") from exc
        if "input_dim" in data and int(data["input_dim"]) != net.input_dim:
            raise ValueError(f"input_dim {data['input_dim']} does not match first layer ({net.input_dim})")
        return net


def forward(net: Network, x) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Exact evaluation returning (output, pre-activations, post-activations).

    The pre/post lists hold one array per hidden layer.
    """
    h = _as_vec(x, "input")
    if h.shape[0] != net.input_dim:
        raise ValueError(f"input has dimension {h.shape[0]}, network expects {net.input_dim}")
    pre, post = [], []
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        z = W @ h + b
        h = np.maximum(z, 0.0)
        pre.append(z)
        post.append(h)
    return net.weights[-1] @ h + net.biases[-1], pre, post


@dataclass(frozen=True)
class Specification:
    """Conjunction of output half-spaces ``a_j . y + b_j > 0``."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        b = _as_vec(self.b, "spec offsets").copy()
        if A.shape[0] == 0:
            raise ValueError("specification needs at least one constraint")
        if A.shape[0] != b.shape[0]:
            raise ValueError("specification has mismatched constraint counts")
        if np.any(np.all(A == 0, axis=1)):
            raise ValueError("specification constraint vectors must be nonzero")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("specification has non-finite entries")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_constraints(cls, constraints) -> "Specification":
        constraints = list(constraints)
        return cls([a for a, _ in constraints], [b for _, b in constraints])

    @classmethod
    def positive(cls, dim: int = 1, index: int = 0) -> "Specification":
        """f_index(x) > 0."""
        a = np.zeros(dim)
        a[index] = 1.0
        return cls([a], [0.0])

    @classmethod
    def classification(cls, n_classes: int, label: int) -> "Specification":
        rows = []
        for k in range(n_classes):
            if k != label:
                a = np.zeros(n_classes)
                a[label], a[k] = 1.0, -1.0
                rows.append(a)
        return cls(rows, np.zeros(len(rows)))

    @classmethod
    def output_limits(cls, lower, upper) -> "Specification":
        """lower_k < y_k < upper_k; pass None or +-inf to skip a side."""
        rows, offs = [], []
        n = len(lower) if lower is not None else len(upper)
        for k in range(n):
            if upper is not None and np.isfinite(upper[k]):
                a = np.zeros(n)
                a[k] = -1.0
                rows.append(a)
                offs.append(float(upper[k]))
            if lower is not None and np.isfinite(lower[k]):
                a = np.zeros(n)
                a[k] = 1.0
                rows.append(a)
                offs.append(-float(lower[k]))
        return cls(rows, offs)

    @property
    def n_constraints(self) -> int:
        return self.A.shape[0]

    @property
    def output_dim(self) -> int:
        return self.A.shape[1]

    def constraint(self, j: int) -> "Specification":
        return Specification(self.A[j : j + 1], self.b[j : j + 1])

    def margins(self, y) -> np.ndarray:
        y = _as_vec(y, "output")
        if y.shape[0] != self.output_dim:
            raise ValueError(f"output has dimension {y.shape[0]}, specification expects {self.output_dim}")
        return self.A @ y + self.b

    def batch_margin(self, Y: np.ndarray) -> np.ndarray:
        """Minimum margin per row of a (n, d_L) output array."""
        return (Y @ self.A.T + self.b).min(axis=1)

    def to_dict(self) -> dict:
        return {"constraints": [{"a": a.tolist(), "b": float(b)} for a, b in zip(self.A, self.b)]}

    @classmethod
    def from_dict(cls, data: dict) -> "Specification":
        try:
            return cls.from_constraints((c["a"], c["b"]) for c in data["constraints"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed specification: missing or invalid {exc}") from exc


def eval_spec(spec: Specification, y) -> tuple[bool, np.ndarray]:
    """Verified iff every margin is strictly positive; a zero margin is adversarial."""
    m = spec.margins(y)
    return bool(np.all(m > 0)), m


def is_verified(net: Network, spec: Specification, x) -> bool:
    return eval_spec(spec, forward(net, x)[0])[0]


def spec_margin(net: Network, spec: Specification, x) -> float:
    return float(eval_spec(spec, forward(net, x)[0])[1].min())


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_vec(self.lower, "box lower").copy()
        hi = _as_vec(self.upper, "box upper").copy()
        if lo.shape != hi.shape:
            raise ValueError("box bounds have different dimensions")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ValueError("box lower bound must not exceed upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, center, half_width) -> "Box":
        c = _as_vec(center)
        return cls(c - half_width, c + half_width)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def contains(self, x, tol: float = 0.0) -> bool:
        x = _as_vec(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def intersect(self, other: "Box") -> "Box":
        lo = np.maximum(self.lower, other.lower)
        hi = np.minimum(self.upper, other.upper)
        return Box(lo, np.maximum(hi, lo))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Box":
        try:
            return cls(data["lower"], data["upper"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed box: missing or invalid {exc}") from exc


DEFAULT_BOX_HALF_WIDTH = 1e4


def default_box(dim: int) -> Box:
    """Stand-in domain when the caller gives none (Big-M needs finite bounds)."""
    return Box(np.full(dim, -DEFAULT_BOX_HALF_WIDTH), np.full(dim, DEFAULT_BOX_HALF_WIDTH))


@dataclass
class Ball:
    center: np.ndarray
    radius: float
    p: float = np.inf
    witness: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.center = _as_vec(self.center, "center")
        self.p = parse_norm(self.p)
        self.radius = float(self.radius)
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if self.witness is not None:
            self.witness = _as_vec(self.witness, "witness")

    def contains(self, x) -> bool:
        return lp_norm(_as_vec(x) - self.center, self.p) <= self.radius

    def check_witness(self, net: Network, spec: Specification, rtol: float = 1e-8) -> bool:
        """Witness is adversarial and sits on the ball surface."""
        if self.witness is None:
            return True
        dist = lp_norm(self.witness - self.center, self.p)
        on_surface = abs(dist - self.radius) <= rtol * max(1.0, self.radius)
        return on_surface and not is_verified(net, spec, self.witness)

    def to_dict(self) -> dict:
        out = {
            "center": self.center.tolist(),
            "radius": self.radius,
            "p": norm_label(self.p),
            "witness": None if self.witness is None else self.witness.tolist(),
        }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Ball":
        return cls(data["center"], data["radius"], data.get("p", "inf"), data.get("witness"))


class ActivationPattern:
    """Phase per hidden neuron, flattened in layer order."""

    def __init__(self, phases, sizes: Sequence[int]):
        self.sizes = list(sizes)
        arr = np.asarray(phases, dtype=np.int8).ravel()
        if arr.shape[0] != sum(self.sizes):
            raise ValueError(f"pattern has {arr.shape[0]} entries, network has {sum(self.sizes)} hidden neurons")
        if np.any((arr < 0) | (arr > 2)):
            raise ValueError("phases must be INACTIVE(0), ACTIVE(1) or FREE(2)")
        self.phases = arr

    @classmethod
    def of_input(cls, net: Network, x) -> "ActivationPattern":
        """Pattern realized at x (zero pre-activation counts as active)."""
        _, pre, _ = forward(net, x)
        return cls(np.concatenate([(z >= 0).astype(np.int8) for z in pre]), net.hidden_sizes)

    @classmethod
    def free(cls, net: Network) -> "ActivationPattern":
        return cls(np.full(net.n_hidden, Phase.FREE, dtype=np.int8), net.hidden_sizes)

    def layers(self) -> list[np.ndarray]:
        out, k = [], 0
        for n in self.sizes:
            out.append(self.phases[k : k + n])
            k += n
        return out

    @property
    def determined(self) -> bool:
        return not np.any(self.phases == Phase.FREE)

    def __len__(self):
        return self.phases.shape[0]

    def __eq__(self, other):
        return isinstance(other, ActivationPattern) and np.array_equal(self.phases, other.phases)

    def __repr__(self):
        sym = {0: "-", 1: "+", 2: "?"}
        return "ActivationPattern(" + " ".join("".join(sym[int(p)] for p in ly) for ly in self.layers()) + ")"


def affine_region(net: Network, pattern: ActivationPattern) -> tuple[np.ndarray, np.ndarray]:
    """(A, v) with f(x) = A x + v on the closure of the pattern's region."""
    A, v = region_maps(net, pattern)[-1]
    return A, v


def region_maps(net: Network, pattern: ActivationPattern) -> list[tuple[np.ndarray, np.ndarray]]:
    """Affine maps x -> z^i for every layer (last entry is the output) under a fixed pattern."""
    if len(pattern) != net.n_hidden:
        raise ValueError("pattern length does not match the network")
    if not pattern.determined:
        raise ValueError("affine_region needs a pattern without FREE entries")
    A = np.eye(net.input_dim)
    v = np.zeros(net.input_dim)
    maps = []
    for (W, b), mask in zip(zip(net.weights[:-1], net.biases[:-1]), pattern.layers()):
        A, v = W @ A, W @ v + b
        maps.append((A, v))
        m = mask.astype(float)
        A, v = A * m[:, None], v * m
    maps.append((net.weights[-1] @ A, net.weights[-1] @ v + net.biases[-1]))
    return maps


def region_inequalities(net: Network, pattern: ActivationPattern) -> tuple[np.ndarray, np.ndarray]:
    """Rows (G, h) with G x <= h describing the closed region of a determined pattern."""
    maps = region_maps(net, pattern)
    G, h = [], []
    for (A, v), mask in zip(maps[:-1], pattern.layers()):
        # active: A x + v >= 0  ->  -A x <= v ; inactive: A x + v <= 0
        sign = np.where(mask == Phase.ACTIVE, -1.0, 1.0)
        G.append(A * sign[:, None])
        h.append(-v * sign)
    if not G:
        return np.zeros((0, net.input_dim)), np.zeros(0)
    return np.vstack(G), np.concatenate(h)


def load_json(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno - 1 < len(text.splitlines()) else ""
        raise ValueError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}\n    {line}") from exc


def _dump(obj, path):
    # repr() of a float is the shortest round-tripping decimal (<= 17 significant digits)
    Path(path).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")


def load_network(path) -> Network:
    return Network.from_dict(load_json(path))


def save_network(net: Network, path) -> None:
    _dump(net.to_dict(), path)


def load_spec(path) -> Specification:
    return Specification.from_dict(load_json(path))


def save_spec(spec: Specification, path) -> None:
    _dump(spec.to_dict(), path)


def load_box(path) -> Box:
    return Box.from_dict(load_json(path))


def save_box(box: Box, path) -> None:
    _dump(box.to_dict(), path)
