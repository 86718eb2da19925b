"""Ranking loss, exact backpropagation, and the mini-batch SGD loop.

Per triplet (u, i, j) the loss is -ln sigmoid(s_ui - s_uj) plus an L2 term
over the parameters the triplet actually touches: the attribute and neighbor
embedding rows looked up by any of the three forward passes, and W and b.
Gradients are computed by hand through the dot-product margin, the ReLU
hidden layer, the concatenation, and the pooling (routed to the recorded
argmax rows for max pooling, broadcast to all rows for sum pooling).

One epoch processes as many triplets as the graph has undirected edges,
resampled every epoch; gradients are averaged per batch by default so the
step size is insensitive to batch size.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .graph import AttributedGraph
from .model import (
    ForwardTrace,
    ModelParameters,
    POOLING_MODES,
    forward,
    init_parameters,
    sigmoid,
)
from .sampler import Triplet, TripletSampler

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    """A gradient or update went non-finite; the epoch was aborted."""


@dataclass
class TrainConfig:
    d1: int = 75
    d2: int = 75
    hidden: int = 150
    learning_rate: float = 0.5
    reg: float = 0.00005
    batch_size: int = 100
    epochs: int = 30
    seed: int = 42
    pooling: str = "max"
    grad_agg: str = "mean"
    convergence_tol: float = 1e-4

    def __post_init__(self) -> None:
        for name in ("d1", "d2", "hidden", "batch_size", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.reg < 0:
            raise ValueError("reg must be non-negative")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol must be non-negative")
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}")
        if self.grad_agg not in ("mean", "sum"):
            raise ValueError("grad_agg must be 'mean' or 'sum'")


@dataclass
class GradientSet:
    """Sparse row gradients for the embedding matrices, dense for W and b."""

    attr_rows: dict[int, np.ndarray]
    nbr_rows: dict[int, np.ndarray]
    w_grad: np.ndarray
    b_grad: np.ndarray

    @classmethod
    def zeros(cls, params: ModelParameters) -> "GradientSet":
        return cls(
            attr_rows={},
            nbr_rows={},
            w_grad=np.zeros_like(params.W),
            b_grad=np.zeros_like(params.b),
        )

    def _bump(self, table: dict[int, np.ndarray], row: int, value: np.ndarray) -> None:
        current = table.get(row)
        if current is None:
            table[row] = value.copy()
        else:
            current += value

    def add_attr(self, row: int, value: np.ndarray) -> None:
        self._bump(self.attr_rows, row, value)

    def add_nbr(self, row: int, value: np.ndarray) -> None:
        self._bump(self.nbr_rows, row, value)

    def scale(self, factor: float) -> None:
        for table in (self.attr_rows, self.nbr_rows):
            for value in table.values():
                value *= factor
        self.w_grad *= factor
        self.b_grad *= factor

    def all_finite(self) -> bool:
        if not (np.all(np.isfinite(self.w_grad)) and np.all(np.isfinite(self.b_grad))):
            return False
        for table in (self.attr_rows, self.nbr_rows):
            for value in table.values():
                if not np.all(np.isfinite(value)):
                    return False
        return True


@dataclass
class TrainLog:
    """Per-epoch history; ``loss`` is the full objective (ranking + L2 term)."""

    bpr_loss: list[float] = field(default_factory=list)
    reg_loss: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    triplets: list[int] = field(default_factory=list)
    converged_epoch: int | None = None

    @property
    def loss(self) -> np.ndarray:
        return np.asarray(self.bpr_loss) + np.asarray(self.reg_loss)

    @property
    def epochs_run(self) -> int:
        return len(self.bpr_loss)

    def write_csv(self, fh) -> None:
        fh.write("epoch,loss,seconds,triplets\n")
        total = self.loss
        for e in range(self.epochs_run):
            fh.write(f"{e},{total[e]:.9g},{self.seconds[e]:.6f},{self.triplets[e]}\n")


def _softplus(x: float) -> float:
    # log(1 + e^x) without overflow; equals -ln(sigmoid(-x))
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def _touched_rows(traces) -> tuple[np.ndarray, np.ndarray]:
    """Union of attribute and neighbor rows looked up by the given traces."""
    attr = np.unique(np.concatenate([t.attr_rows for t in traces]))
    nbr = np.unique(np.concatenate([t.nbr_rows for t in traces]))
    return attr, nbr


def _regularization(params: ModelParameters, attr_rows, nbr_rows, reg: float) -> float:
    if reg == 0.0:
        return 0.0
    total = float(np.sum(params.W ** 2)) + float(np.sum(params.b ** 2))
    if len(attr_rows):
        total += float(np.sum(params.P[attr_rows] ** 2))
    if len(nbr_rows):
        total += float(np.sum(params.P_prime[nbr_rows] ** 2))
    return reg * total


def _forward_triplet(params, g, t: Triplet, pooling: str):
    tr_u = forward(params, g, t.u, pooling)
    tr_i = forward(params, g, t.i, pooling)
    tr_j = forward(params, g, t.j, pooling)
    margin = float(np.dot(tr_u.h_vec, tr_i.h_vec) - np.dot(tr_u.h_vec, tr_j.h_vec))
    return tr_u, tr_i, tr_j, margin


def triplet_loss(params: ModelParameters, g: AttributedGraph, t: Triplet,
                 reg: float = 0.0, pooling: str = "max") -> float:
    """-ln sigmoid(margin) plus the L2 term over touched rows, W, and b."""
    tr_u, tr_i, tr_j, margin = _forward_triplet(params, g, t, pooling)
    attr_rows, nbr_rows = _touched_rows((tr_u, tr_i, tr_j))
    return _softplus(-margin) + _regularization(params, attr_rows, nbr_rows, reg)


def _route_pooled_gradient(gs: GradientSet, trace: ForwardTrace, grad_f: np.ndarray,
                           d1: int) -> None:
    """Split a d-length gradient at the concat seam and push it through pooling."""
    attr_part, nbr_part = grad_f[:d1], grad_f[d1:]
    for rows, winners, part, bump in (
        (trace.attr_rows, trace.attr_argmax, attr_part, gs.add_attr),
        (trace.nbr_rows, trace.nbr_argmax, nbr_part, gs.add_nbr),
    ):
        if len(rows) == 0:
            continue  # empty lookup pooled to zero; nothing differentiable
        if trace.pooling == "max":
            routed = np.zeros((len(rows), len(part)))
            routed[winners, np.arange(len(part))] = part
            for local, row in enumerate(rows):
                bump(int(row), routed[local])
        else:  # sum pooling broadcasts
            for row in rows:
                bump(int(row), part)


def triplet_gradients(params: ModelParameters, g: AttributedGraph, t: Triplet,
                      reg: float = 0.0, pooling: str = "max") -> GradientSet:
    """Exact gradients of triplet_loss for every parameter the triplet touches."""
    gs = GradientSet.zeros(params)
    _accumulate_triplet(gs, params, g, t, reg, pooling)
    return gs


def _accumulate_triplet(gs: GradientSet, params: ModelParameters, g: AttributedGraph,
                        t: Triplet, reg: float, pooling: str) -> tuple[float, float]:
    """Add one triplet's gradients into gs; returns (bpr_loss, reg_loss)."""
    tr_u, tr_i, tr_j, margin = _forward_triplet(params, g, t, pooling)
    delta = sigmoid(margin) - 1.0  # d/d(margin) of -ln sigmoid(margin)

    grads_h = (
        (tr_u, delta * (tr_i.h_vec - tr_j.h_vec)),
        (tr_i, delta * tr_u.h_vec),
        (tr_j, -delta * tr_u.h_vec),
    )
    for trace, grad_h in grads_h:
        masked = np.where(trace.pre_activation > 0.0, grad_h, 0.0)
        gs.w_grad += np.outer(masked, trace.f)
        gs.b_grad += masked
        _route_pooled_gradient(gs, trace, params.W.T @ masked, params.d1)

    attr_rows, nbr_rows = _touched_rows((tr_u, tr_i, tr_j))
    if reg != 0.0:
        two_reg = 2.0 * reg
        for row in attr_rows:
            gs.add_attr(int(row), two_reg * params.P[row])
        for row in nbr_rows:
            gs.add_nbr(int(row), two_reg * params.P_prime[row])
        gs.w_grad += two_reg * params.W
        gs.b_grad += two_reg * params.b

    return _softplus(-margin), _regularization(params, attr_rows, nbr_rows, reg)


def apply_update(params: ModelParameters, grads: GradientSet, learning_rate: float) -> None:
    """One SGD step in place; rejects non-finite gradients."""
    if not grads.all_finite():
        raise TrainingDivergedError(
            "non-finite gradient encountered; lower the learning rate or check inputs"
        )
    for row, value in grads.attr_rows.items():
        params.P[row] -= learning_rate * value
    for row, value in grads.nbr_rows.items():
        params.P_prime[row] -= learning_rate * value
    params.W -= learning_rate * grads.w_grad
    params.b -= learning_rate * grads.b_grad


def train(g: AttributedGraph, cfg: TrainConfig) -> tuple[ModelParameters, TrainLog]:
    """Run the sample / forward / backprop / update loop until the epoch loss
    stabilizes (relative change below ``convergence_tol``) or ``epochs`` pass.

    One epoch draws as many triplets as there are undirected edges.  Fully
    deterministic for a fixed seed: the parameter init and the triplet stream
    use independent substreams spawned from ``cfg.seed``.
    """
    if g.edge_count == 0:
        raise ValueError("cannot train on a graph with no edges")

    init_seed, sampler_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    params = init_parameters(g.node_count, g.attribute_count, cfg.d1, cfg.d2,
                             cfg.hidden, seed=init_seed)
    sampler = TripletSampler(g, seed=sampler_seed)

    triplets_per_epoch = g.edge_count
    tlog = TrainLog()
    previous = None
    for epoch in range(cfg.epochs):
        started = time.perf_counter()
        epoch_bpr = 0.0
        epoch_reg = 0.0
        remaining = triplets_per_epoch
        while remaining > 0:
            batch = sampler.sample_batch(min(cfg.batch_size, remaining))
            remaining -= len(batch)
            grads = GradientSet.zeros(params)
            for t in batch:
                bpr, reg_term = _accumulate_triplet(grads, params, g, t, cfg.reg, cfg.pooling)
                epoch_bpr += bpr
                epoch_reg += reg_term
            if cfg.grad_agg == "mean":
                grads.scale(1.0 / len(batch))
            apply_update(params, grads, cfg.learning_rate)

        total = epoch_bpr + epoch_reg
        if not math.isfinite(total):
            raise TrainingDivergedError(
                f"epoch {epoch} loss is {total}; lower the learning rate"
            )
        tlog.bpr_loss.append(epoch_bpr)
        tlog.reg_loss.append(epoch_reg)
        tlog.seconds.append(time.perf_counter() - started)
        tlog.triplets.append(triplets_per_epoch)
        log.info("epoch %d: loss=%.6f (ranking=%.6f l2=%.6f) %.2fs",
                 epoch, total, epoch_bpr, epoch_reg, tlog.seconds[-1])

        if previous is not None and cfg.convergence_tol > 0:
            change = abs(total - previous) / max(abs(previous), 1e-30)
            if change < cfg.convergence_tol:
                tlog.converged_epoch = epoch
                log.info("converged at epoch %d (relative change %.2e)", epoch, change)
                break
        previous = total

    if not params.all_finite():
        raise TrainingDivergedError("parameters went non-finite during training")
    return params, tlog
