"""Embedding table container and its text / binary file formats.

Text format: a header line ``<n> <dim>`` followed by one line per node,
``<node-id> <v_1> ... <v_dim>`` with 9 significant digits.

Binary format (little-endian): magic ``NBRN``, version u32, n u32, dim u32,
then n*dim row-major float64 values.  Rows are implicitly nodes 0..n-1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"NBRN"
FORMAT_VERSION = 1


class SerializationError(ValueError):
    """A stored embedding or checkpoint file is malformed."""


@dataclass
class EmbeddingTable:
    """One representation vector per node: row u embeds node ids[u]."""

    vectors: np.ndarray
    ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise SerializationError("embedding table must be a 2-d matrix")
        if self.ids is None:
            self.ids = np.arange(self.vectors.shape[0], dtype=np.int64)
        else:
            self.ids = np.asarray(self.ids, dtype=np.int64)
        if len(self.ids) != self.vectors.shape[0]:
            raise SerializationError("id column length does not match row count")

    @property
    def node_count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def has_contiguous_ids(self) -> bool:
        return bool(np.array_equal(self.ids, np.arange(self.node_count)))


def write_embedding_text(table: EmbeddingTable, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"{table.node_count} {table.dim}\n")
        for node_id, row in zip(table.ids, table.vectors):
            values = " ".join(f"{v:.9g}" for v in row)
            fh.write(f"{int(node_id)} {values}\n")


def read_embedding_text(path) -> EmbeddingTable:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise SerializationError(f"{path}: expected '<n> <dim>' header")
        try:
            n, dim = int(header[0]), int(header[1])
        except ValueError:
            raise SerializationError(f"{path}: non-integer header fields") from None
        ids = np.empty(n, dtype=np.int64)
        vectors = np.empty((n, dim), dtype=np.float64)
        for row in range(n):
            toks = fh.readline().split()
            if len(toks) != dim + 1:
                raise SerializationError(
                    f"{path}: row {row} has {len(toks)} fields, expected {dim + 1}"
                )
            ids[row] = int(toks[0])
            vectors[row] = [float(t) for t in toks[1:]]
    return EmbeddingTable(vectors=vectors, ids=ids)


def write_embedding_binary(table: EmbeddingTable, path) -> None:
    if not table.has_contiguous_ids():
        raise SerializationError("binary embedding format requires ids 0..n-1")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", FORMAT_VERSION, table.node_count, table.dim))
        fh.write(np.ascontiguousarray(table.vectors, dtype="<f8").tobytes())


def read_embedding_binary(path) -> EmbeddingTable:
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise SerializationError(f"{path}: bad magic {magic!r}")
        version, n, dim = struct.unpack("<III", fh.read(12))
        if version != FORMAT_VERSION:
            raise SerializationError(f"{path}: unsupported version {version}")
        payload = fh.read(8 * n * dim)
        if len(payload) != 8 * n * dim:
            raise SerializationError(f"{path}: truncated payload")
        vectors = np.frombuffer(payload, dtype="<f8").reshape(n, dim).copy()
    return EmbeddingTable(vectors=vectors)


def read_embedding(path) -> EmbeddingTable:
    """Load an embedding file, sniffing text versus binary by magic bytes."""
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(4)
    if magic == MAGIC:
        return read_embedding_binary(path)
    return read_embedding_text(path)
