"""Minimal deterministic trainer for fixture networks.

Full-batch gradient descent on mean squared error. Inputs and targets are
standardized during training; the affine maps are folded back into the first
and last layers so the returned network acts on raw units.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .network import Network

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    hidden: list = field(default_factory=lambda: [16, 16])
    lr: float = 1e-3
    epochs: int = 10_000
    train_fraction: float = 0.8
    seed: int = 0
    standardize: bool = True
    log_every: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainReport:
    train_mse: float
    test_mse: float
    test_rmse: float
    relative_test_rmse: float
    epochs: int
    n_train: int
    n_test: int

    def to_dict(self) -> dict:
        return asdict(self)


def init_params(sizes, rng: np.random.Generator):
    """Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases."""
    Ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        a = 1.0 / math.sqrt(fan_in)
        Ws.append(rng.uniform(-a, a, (fan_out, fan_in)))
        bs.append(rng.uniform(-a, a, fan_out))
    return Ws, bs


def _forward(Ws, bs, X):
    acts = [X]
    h = X
    for W, b in zip(Ws[:-1], bs[:-1]):
        h = np.maximum(h @ W.T + b, 0.0)
        acts.append(h)
    return acts, h @ Ws[-1].T + bs[-1]


def _gradients(Ws, bs, X, Y):
    acts, out = _forward(Ws, bs, X)
    n = X.shape[0]
    delta = 2.0 * (out - Y) / (n * Y.shape[1])
    gW, gb = [None] * len(Ws), [None] * len(Ws)
    for i in range(len(Ws) - 1, -1, -1):
        gW[i] = delta.T @ acts[i]
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ Ws[i]) * (acts[i] > 0)
    return float(np.mean((out - Y) ** 2)), gW, gb


def _fold(Ws, bs, mx, sx, my, sy) -> Network:
    Ws = [W.copy() for W in Ws]
    bs = [b.copy() for b in bs]
    bs[0] = bs[0] - Ws[0] @ (mx / sx)
    Ws[0] = Ws[0] / sx
    Ws[-1] = Ws[-1] * sy[:, None]
    bs[-1] = bs[-1] * sy + my
    return Network(Ws, bs)


def split(n: int, fraction: float, seed) -> tuple[np.ndarray, np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    k = max(1, min(n, int(round(fraction * n))))
    return perm[:k], perm[k:]


def train_fixture(X, Y, cfg: TrainConfig) -> tuple[Network, TrainReport]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    Y = Y.reshape(len(Y), -1)
    if X.shape[0] == 0 or X.shape[0] != Y.shape[0]:
        raise ValueError("dataset is empty or inputs and targets differ in length")
    rng = np.random.default_rng(cfg.seed)
    tr, te = split(X.shape[0], cfg.train_fraction, rng.integers(2**31))
    Xtr, Ytr = X[tr], Y[tr]
    if cfg.standardize:
        mx, sx = Xtr.mean(axis=0), Xtr.std(axis=0)
        my, sy = Ytr.mean(axis=0), Ytr.std(axis=0)
        sx[sx == 0] = 1.0
        sy[sy == 0] = 1.0
    else:
        mx, sx = np.zeros(X.shape[1]), np.ones(X.shape[1])
        my, sy = np.zeros(Y.shape[1]), np.ones(Y.shape[1])
    Xn, Yn = (Xtr - mx) / sx, (Ytr - my) / sy
    Ws, bs = init_params([X.shape[1], *cfg.hidden, Y.shape[1]], rng)
    loss = math.nan
    for epoch in range(cfg.epochs):
        loss, gW, gb = _gradients(Ws, bs, Xn, Yn)
        if not math.isfinite(loss):
            raise TrainingDiverged(f"loss became {loss} at epoch {epoch}; lower the learning rate")
        for i in range(len(Ws)):
            Ws[i] -= cfg.lr * gW[i]
            bs[i] -= cfg.lr * gb[i]
        if cfg.log_every and epoch % cfg.log_every == 0:
            log.info("epoch %d loss %.6g", epoch, loss)
    net = _fold(Ws, bs, mx, sx, my, sy) if cfg.standardize else Network(Ws, bs)
    report = evaluate(net, X, Y, tr, te, cfg.epochs)
    if not math.isfinite(report.train_mse):
        raise TrainingDiverged("final network produces non-finite outputs")
    return net, report


def evaluate(net: Network, X, Y, tr, te, epochs: int) -> TrainReport:
    def mse(idx):
        if len(idx) == 0:
            return math.nan
        return float(np.mean((net.batch(X[idx]) - Y[idx]) ** 2))

    test = mse(te)
    rms = float(np.sqrt(np.mean(Y[te] ** 2))) if len(te) else math.nan
    rmse = math.sqrt(test) if math.isfinite(test) else math.nan
    return TrainReport(mse(tr), test, rmse, rmse / rms if rms else math.nan, epochs, len(tr), len(te))
