"""Model parameters and the forward pass.

A node is encoded by max-pooling embedding rows looked up for its attributes
and, separately, for its neighbors; the two pooled vectors are concatenated
and pushed through a shared ReLU layer.  Node similarity is the dot product
of the hidden representations, and the ranking probability for a triplet is
a sigmoid of the similarity margin.

Nodes with an empty attribute set (or no neighbors) pool to the zero vector
and route no gradient through that half; max-pool ties resolve to the lowest
row index so backpropagation is deterministic.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import AttributedGraph
from .serialize import FORMAT_VERSION, MAGIC, EmbeddingTable, SerializationError

POOLING_MODES = ("max", "sum")

_EMPTY_ARGMAX = np.empty(0, dtype=np.int64)


@dataclass
class ModelParameters:
    """All learnable state: two embedding matrices plus the hidden layer.

    P (attribute_count x d1) embeds attributes, P_prime (node_count x d2)
    embeds nodes in their neighbor role, W (h x d) and b (h) form the hidden
    layer, with d = d1 + d2.
    """

    P: np.ndarray
    P_prime: np.ndarray
    W: np.ndarray
    b: np.ndarray
    d1: int
    d2: int
    h: int

    @property
    def d(self) -> int:
        return self.d1 + self.d2

    def copy(self) -> "ModelParameters":
        return ModelParameters(
            P=self.P.copy(), P_prime=self.P_prime.copy(),
            W=self.W.copy(), b=self.b.copy(),
            d1=self.d1, d2=self.d2, h=self.h,
        )

    def all_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.P)) and np.all(np.isfinite(self.P_prime))
            and np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))
        )


@dataclass
class ForwardTrace:
    """Every intermediate of one forward pass, kept for exact backprop.

    ``attr_argmax`` / ``nbr_argmax`` hold, per output dimension, the local
    index into ``attr_rows`` / ``nbr_rows`` that won the max-pool (empty for
    sum pooling or an empty lookup set).
    """

    node: int
    attr_rows: np.ndarray
    nbr_rows: np.ndarray
    attr_argmax: np.ndarray
    nbr_argmax: np.ndarray
    f: np.ndarray
    pre_activation: np.ndarray
    h_vec: np.ndarray
    pooling: str = "max"


INIT_STDDEV = 0.1  # i.e. variance 0.01; smaller scales cannot escape the
                   # flat region of the ranking loss at the default step size


def init_parameters(n: int, m: int, d1: int, d2: int, h: int, seed=0) -> ModelParameters:
    """Draw every entry i.i.d. from a zero-mean Gaussian, deterministically per seed.

    Matrices are drawn in the fixed order P, P_prime, W, b.
    """
    for name, value in (("n", n), ("m", m), ("d1", d1), ("d2", d2), ("h", h)):
        if value < 1:
            raise ValueError(f"dimension {name} must be >= 1, got {value}")
    rng = np.random.default_rng(seed)
    return ModelParameters(
        P=rng.normal(0.0, INIT_STDDEV, size=(m, d1)),
        P_prime=rng.normal(0.0, INIT_STDDEV, size=(n, d2)),
        W=rng.normal(0.0, INIT_STDDEV, size=(h, d1 + d2)),
        b=rng.normal(0.0, INIT_STDDEV, size=h),
        d1=d1, d2=d2, h=h,
    )


def _pool_rows(matrix: np.ndarray, rows: np.ndarray, width: int, pooling: str):
    """Pool the selected rows columnwise; empty selections pool to zero."""
    if len(rows) == 0:
        return np.zeros(width), _EMPTY_ARGMAX
    sub = matrix[rows]
    if pooling == "max":
        winners = np.argmax(sub, axis=0)  # first row wins ties
        return sub[winners, np.arange(width)], winners
    if pooling == "sum":
        return sub.sum(axis=0), _EMPTY_ARGMAX
    raise ValueError(f"unknown pooling mode {pooling!r}")


def encode_attributes(params: ModelParameters, g: AttributedGraph, u: int, pooling="max"):
    """Pooled attribute vector for node u plus per-dimension winner indices."""
    return _pool_rows(params.P, g.attributes[u], params.d1, pooling)


def encode_neighbors(params: ModelParameters, g: AttributedGraph, u: int, pooling="max"):
    """Pooled neighborhood vector for node u plus per-dimension winner indices."""
    return _pool_rows(params.P_prime, g.neighbors[u], params.d2, pooling)


def integrate(v_attr: np.ndarray, v_nbr: np.ndarray) -> np.ndarray:
    """Concatenate the two pooled halves, attribute half first."""
    return np.concatenate([v_attr, v_nbr])


def split_integrated(f: np.ndarray, d1: int):
    """Inverse of integrate: recover (v_attr, v_nbr)."""
    return f[:d1], f[d1:]


def hidden(params: ModelParameters, f: np.ndarray):
    """ReLU hidden transform; returns (h_vec, pre_activation)."""
    pre = params.W @ f + params.b
    return np.maximum(pre, 0.0), pre


def forward(params: ModelParameters, g: AttributedGraph, u: int, pooling="max") -> ForwardTrace:
    v_attr, attr_argmax = encode_attributes(params, g, u, pooling)
    v_nbr, nbr_argmax = encode_neighbors(params, g, u, pooling)
    f = integrate(v_attr, v_nbr)
    h_vec, pre = hidden(params, f)
    return ForwardTrace(
        node=u,
        attr_rows=g.attributes[u],
        nbr_rows=g.neighbors[u],
        attr_argmax=attr_argmax,
        nbr_argmax=nbr_argmax,
        f=f,
        pre_activation=pre,
        h_vec=h_vec,
        pooling=pooling,
    )


def similarity(h_u: np.ndarray, h_i: np.ndarray) -> float:
    if h_u.shape != h_i.shape:
        raise ValueError("similarity needs vectors of equal length")
    return float(np.dot(h_u, h_i))


def sigmoid(x: float) -> float:
    # sign-split keeps exp() arguments non-positive, so no overflow
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def bpr_probability(s_ui: float, s_uj: float) -> float:
    """Probability that the ranking s_ui > s_uj is preserved."""
    return sigmoid(s_ui - s_uj)


def embed_all(
    params: ModelParameters,
    g: AttributedGraph,
    layer: str = "h",
    pooling: str = "max",
    threads: int = 1,
) -> EmbeddingTable:
    """Embed every node; row u is its hidden vector (or pooled vector for layer='f')."""
    if layer not in ("h", "f"):
        raise ValueError(f"layer must be 'h' or 'f', got {layer!r}")
    dim = params.h if layer == "h" else params.d
    out = np.empty((g.node_count, dim))

    def fill(span):
        for u in span:
            trace = forward(params, g, u, pooling)
            out[u] = trace.h_vec if layer == "h" else trace.f

    if threads > 1 and g.node_count > 1:
        chunks = np.array_split(np.arange(g.node_count), threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, chunks))
    else:
        fill(range(g.node_count))
    return EmbeddingTable(vectors=out)


def save_checkpoint(params: ModelParameters, path) -> None:
    """Persist parameters: NBRN magic, version, dims (n, m, d1, d2, h), then
    P, P_prime, W, b row-major as little-endian float64."""
    n, m = params.P_prime.shape[0], params.P.shape[0]
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIIIII", FORMAT_VERSION, n, m, params.d1, params.d2, params.h))
        for block in (params.P, params.P_prime, params.W, params.b):
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def load_checkpoint(path) -> ModelParameters:
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise SerializationError(f"{path}: bad magic {magic!r}")
        version, n, m, d1, d2, h = struct.unpack("<IIIIII", fh.read(24))
        if version != FORMAT_VERSION:
            raise SerializationError(f"{path}: unsupported version {version}")
        d = d1 + d2
        counts = (m * d1, n * d2, h * d, h)
        payload = fh.read(8 * sum(counts))
        if len(payload) != 8 * sum(counts):
            raise SerializationError(f"{path}: truncated payload")
    flat = np.frombuffer(payload, dtype="<f8")
    offsets = np.cumsum((0,) + counts)
    return ModelParameters(
        P=flat[offsets[0]:offsets[1]].reshape(m, d1).copy(),
        P_prime=flat[offsets[1]:offsets[2]].reshape(n, d2).copy(),
        W=flat[offsets[2]:offsets[3]].reshape(h, d).copy(),
        b=flat[offsets[3]:offsets[4]].copy(),
        d1=d1, d2=d2, h=h,
    )
