"""Synthetic three-generator dispatch data.

Generation follows merit order with minimum-output floors: every unit starts
at its floor, then the cheapest unit is raised to its maximum, then the next,
until the total matches demand.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class DispatchConfig:
    costs: tuple = (1.0, 2.0, 3.0)
    limits: tuple = ((30.0, 100.0), (60.0, 200.0), (30.0, 100.0))
    nominal: tuple = (125.0, 90.0, 100.0)
    noise: float = 0.10
    n_samples: int = 1000
    seed: int = 0
    max_resample: int = 1000

    def __post_init__(self):
        lim = np.asarray(self.limits, dtype=float)
        if lim.ndim != 2 or lim.shape[1] != 2 or len(self.costs) != lim.shape[0]:
            raise ValueError("need one (min, max) limit pair per cost coefficient")
        if np.any(lim <= 0) or np.any(lim[:, 0] > lim[:, 1]):
            raise ValueError("limits must be positive with min <= max")
        if not 0 <= self.noise < 1:
            raise ValueError("noise fraction must lie in [0, 1)")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        nominal = np.asarray(self.nominal, dtype=float)
        if nominal.sum() * (1 - self.noise) > lim[:, 1].sum():
            raise ValueError("capacity is below the smallest possible total demand")
        if nominal.sum() * (1 + self.noise) < lim[:, 0].sum():
            raise ValueError("minimum output exceeds the largest possible total demand")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["limits"] = [list(x) for x in self.limits]
        d["costs"] = list(self.costs)
        d["nominal"] = list(self.nominal)
        return d


def merit_order(total: float, costs, limits) -> np.ndarray:
    """Dispatch ``total`` MW; raises ValueError when it lies outside [sum of floors, sum of maxima]."""
    lim = np.asarray(limits, dtype=float)
    lo, hi = lim[:, 0], lim[:, 1]
    if total < lo.sum() or total > hi.sum():
        raise ValueError(f"demand {total} outside dispatchable range [{lo.sum()}, {hi.sum()}]")
    y = lo.copy()
    rest = total - lo.sum()
    for i in np.argsort(np.asarray(costs, dtype=float), kind="stable"):
        take = min(hi[i] - lo[i], rest)
        y[i] += take
        rest -= take
    return y


def datagen_dispatch(cfg: DispatchConfig) -> tuple[np.ndarray, np.ndarray]:
    """(X, Y) with X uniform in nominal * (1 +- noise) and Y the merit-order dispatch."""
    rng = np.random.default_rng(cfg.seed)
    nominal = np.asarray(cfg.nominal, dtype=float)
    lim = np.asarray(cfg.limits, dtype=float)
    X = np.empty((cfg.n_samples, nominal.size))
    Y = np.empty((cfg.n_samples, lim.shape[0]))
    for s in range(cfg.n_samples):
        for _ in range(cfg.max_resample):
            x = nominal * (1 + rng.uniform(-cfg.noise, cfg.noise, nominal.size))
            if lim[:, 0].sum() <= x.sum() <= lim[:, 1].sum():
                break
        else:
            raise ValueError("could not draw a dispatchable demand; check the configuration")
        X[s] = x
        Y[s] = merit_order(float(x.sum()), cfg.costs, cfg.limits)
    return X, Y


def save_dataset(path, X: np.ndarray, Y: np.ndarray) -> None:
    header = ",".join([f"x_{i}" for i in range(X.shape[1])] + [f"y_{i}" for i in range(Y.shape[1])])
    np.savetxt(path, np.hstack([X, Y]), delimiter=",", header=header, comments="", fmt="%.17g")


def load_dataset(path, n_inputs: int = 3) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :n_inputs], data[:, n_inputs:]
