"""Interval bound propagation and Big-M constants for the ReLU encoding."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import Box, Network, Phase


@dataclass
class NeuronBounds:
    """Pre-activation bounds per hidden layer (lists of arrays)."""

    lower: list
    upper: list
    post_lower: Optional[list] = None
    post_upper: Optional[list] = None

    @property
    def lo(self) -> np.ndarray:
        return np.concatenate(self.lower) if self.lower else np.zeros(0)

    @property
    def hi(self) -> np.ndarray:
        return np.concatenate(self.upper) if self.upper else np.zeros(0)

    @property
    def always_active(self) -> np.ndarray:
        return self.lo >= 0

    @property
    def always_inactive(self) -> np.ndarray:
        return self.hi <= 0

    @property
    def unstable(self) -> np.ndarray:
        return ~(self.always_active | self.always_inactive)

    def to_dict(self) -> dict:
        return {
            "layers": [
                {"lower": lo.tolist(), "upper": hi.tolist()} for lo, hi in zip(self.lower, self.upper)
            ],
            "n_unstable": int(self.unstable.sum()),
        }


def _affine_interval(W, b, lo, hi):
    Wp = np.maximum(W, 0.0)
    Wn = np.minimum(W, 0.0)
    return Wp @ lo + Wn @ hi + b, Wp @ hi + Wn @ lo + b


def interval_bounds(net: Network, box: Box, phases: Optional[np.ndarray] = None) -> Optional[NeuronBounds]:
    """Layer-by-layer interval arithmetic over ``box``.

    ``phases`` optionally pins neurons (flat array of Phase values). Stored
    bounds are the raw pre-activation intervals; pinning only changes what
    is propagated forward (an inactive neuron passes exactly 0). A pinned
    neuron whose interval contradicts its phase makes the region empty and
    the function returns None.
    """
    if box.dim != net.input_dim:
        raise ValueError(f"box has dimension {box.dim}, network expects {net.input_dim}")
    lo, hi = box.lower.astype(float), box.upper.astype(float)
    lowers, uppers, plo, phi = [], [], [], []
    k = 0
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        zl, zu = _affine_interval(W, b, lo, hi)
        n = W.shape[0]
        lowers.append(zl)
        uppers.append(zu)
        lo, hi = np.maximum(zl, 0.0), np.maximum(zu, 0.0)
        if phases is not None:
            ph = phases[k : k + n]
            ina = ph == Phase.INACTIVE
            if np.any(zu[ph == Phase.ACTIVE] < 0) or np.any(zl[ina] > 0):
                return None
            hi = np.where(ina, 0.0, hi)
        plo.append(lo)
        phi.append(hi)
        k += n
    return NeuronBounds(lowers, uppers, plo, phi)


def _last_post(bounds: NeuronBounds):
    if bounds.post_lower is not None:
        return bounds.post_lower[-1], bounds.post_upper[-1]
    return np.maximum(bounds.lower[-1], 0.0), np.maximum(bounds.upper[-1], 0.0)


def output_bounds(net: Network, bounds: NeuronBounds) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = _last_post(bounds)
    return _affine_interval(net.weights[-1], net.biases[-1], lo, hi)


def margin_lower_bound(net: Network, a: np.ndarray, b: float, bounds: NeuronBounds) -> float:
    """Interval lower bound of a . f(x) + b, composing a with the last layer first."""
    w = a @ net.weights[-1]
    lo, hi = _last_post(bounds)
    return float(np.maximum(w, 0) @ lo + np.minimum(w, 0) @ hi + a @ net.biases[-1] + b)


def big_m(bounds: NeuronBounds) -> tuple[np.ndarray, np.ndarray]:
    """(M_lo, M_hi) = (-lo, hi), clipped below at zero.

    With binary a they make ``zh >= z, zh <= z + M_lo (1 - a), zh <= M_hi a,
    zh >= 0`` an exact ReLU.
    """
    return np.maximum(-bounds.lo, 0.0), np.maximum(bounds.hi, 0.0)


def lp_tightened_bounds(net: Network, box: Box) -> NeuronBounds:
    """Interval bounds refined neuron by neuron with the LP relaxation of earlier layers."""
    from .milp import tighten_bounds_lp

    return tighten_bounds_lp(net, box)
