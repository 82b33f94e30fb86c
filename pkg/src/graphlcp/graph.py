"""Sparse undirected graphs and structural node statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InputError

CLASSIFICATION = "classification"
REGRESSION = "regression"
TASKS = (CLASSIFICATION, REGRESSION)


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Undirected weighted graph stored as symmetric CSR arrays.

    Rows are sorted by column index and contain no duplicates. Both
    orientations of every edge are stored with the same weight.
    """

    num_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    weighted_degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        for name, arr in (("indptr", indptr), ("indices", indices), ("weights", weights)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if (
            indptr.shape != (self.num_nodes + 1,)
            or indptr[-1] != indices.shape[0]
            or indices.shape != weights.shape
        ):
            raise InputError("inconsistent CSR arrays")
        rows = np.repeat(np.arange(self.num_nodes, dtype=np.int64), np.diff(indptr))
        deg = np.bincount(rows, weights=weights, minlength=self.num_nodes).astype(np.float64)
        deg.setflags(write=False)
        object.__setattr__(self, "weighted_degrees", deg)

    @classmethod
    def from_entries(cls, num_nodes: int, rows, cols, weights=None) -> "SparseGraph":
        """Build from directed entries; each (i, j) is mirrored to (j, i).

        Duplicate entries collapse to one, keeping the weight of the first
        occurrence after mirroring.
        """
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if weights is None:
            weights = np.ones(rows.shape[0])
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if not (rows.shape == cols.shape == weights.shape):
            raise InputError("rows, cols and weights must have equal length")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise InputError("edge weights must be finite and nonnegative")
        r = np.concatenate([rows, cols])
        c = np.concatenate([cols, rows])
        w = np.concatenate([weights, weights])
        key = r * num_nodes + c
        _, first = np.unique(key, return_index=True)
        r, c, w = r[first], c[first], w[first]
        order = np.lexsort((c, r))
        r, c, w = r[order], c[order], w[order]
        indptr = np.zeros(num_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=num_nodes), out=indptr[1:])
        return cls(num_nodes, indptr, c, w)

    @property
    def degrees(self) -> np.ndarray:
        """Unweighted degree (number of stored neighbours, self-loops included)."""
        return np.diff(self.indptr)

    @property
    def num_entries(self) -> int:
        return int(self.indices.shape[0])

    @property
    def l1_norm(self) -> float:
        """Sum of all stored entries, i.e. ``sum_ij A_ij``."""
        return float(self.weights.sum())

    def neighbors(self, node: int) -> np.ndarray:
        return self.indices[self.indptr[node] : self.indptr[node + 1]]

    def neighbor_weights(self, node: int) -> np.ndarray:
        return self.weights[self.indptr[node] : self.indptr[node + 1]]

    def weight(self, i: int, j: int) -> float:
        nbrs = self.neighbors(i)
        pos = np.searchsorted(nbrs, j)
        if pos < nbrs.shape[0] and nbrs[pos] == j:
            return float(self.weights[self.indptr[i] + pos])
        return 0.0

    def row_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees)

    def edge_list(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Each undirected edge once, as ``(src, dst, weight)`` with src <= dst."""
        rows = self.row_ids()
        keep = rows <= self.indices
        return rows[keep], self.indices[keep], self.weights[keep]

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (np.array(self.weights), np.array(self.indices), np.array(self.indptr)),
            shape=(self.num_nodes, self.num_nodes),
        )

    def is_symmetric(self, atol: float = 0.0) -> bool:
        a = self.to_scipy()
        diff = abs(a - a.T)
        return diff.nnz == 0 or float(diff.max()) <= atol


def load_graph(edge_rows: Iterable[Sequence[int]], num_nodes: int) -> SparseGraph:
    """Symmetrized unit-weight graph from ``(src, dst)`` rows.

    Edges may appear in either orientation; duplicates collapse.
    """
    src, dst = [], []
    for row_no, row in enumerate(edge_rows):
        if len(row) != 2:
            raise InputError(f"edge row {row_no}: expected 2 fields, got {len(row)}")
        a, b = int(row[0]), int(row[1])
        if not (0 <= a < num_nodes and 0 <= b < num_nodes):
            raise InputError(f"edge row {row_no}: node id out of range [0, {num_nodes}): ({a}, {b})")
        src.append(a)
        dst.append(b)
    return SparseGraph.from_entries(num_nodes, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64))


# ---------------------------------------------------------------------------
# homophily
# ---------------------------------------------------------------------------


def _check_values(graph: SparseGraph, values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (graph.num_nodes,):
        raise InputError(f"expected {graph.num_nodes} per-node values, got shape {values.shape}")
    return values


def _off_diagonal(graph: SparseGraph):
    rows = graph.row_ids()
    keep = rows != graph.indices
    return rows[keep], graph.indices[keep]


def regression_normalizer(graph: SparseGraph, targets) -> float:
    """Largest absolute target gap over the graph's edges."""
    targets = _check_values(graph, targets)
    rows, cols = _off_diagonal(graph)
    if rows.size == 0:
        return 0.0
    return float(np.max(np.abs(targets[rows] - targets[cols])))


def node_homophily(graph: SparseGraph, values, task: str, normalizer: float | None = None) -> np.ndarray:
    """Per-node homophily; NaN for nodes without neighbours.

    ``values`` are class ids for classification and real targets for
    regression. The regression normalizer defaults to the max edge gap of
    ``graph``; pass it explicitly to reuse one computed on another graph.
    Self-loops are ignored.
    """
    values = _check_values(graph, values)
    if task not in TASKS:
        raise InputError(f"unknown task {task!r}")
    rows, cols = _off_diagonal(graph)
    if np.any(np.isnan(values[rows])) or np.any(np.isnan(values[cols])):
        raise InputError("homophily needs a label for every non-isolated node")
    n = graph.num_nodes
    deg = np.bincount(rows, minlength=n).astype(np.float64)
    if task == CLASSIFICATION:
        agree = (values[rows] == values[cols]).astype(np.float64)
        score = np.bincount(rows, weights=agree, minlength=n)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = score / deg
    else:
        if normalizer is None:
            normalizer = regression_normalizer(graph, values)
        if normalizer == 0.0:
            out = np.ones(n)
        else:
            gap = np.abs(values[rows] - values[cols]) / normalizer
            total = np.bincount(rows, weights=gap, minlength=n)
            with np.errstate(invalid="ignore", divide="ignore"):
                out = 1.0 - total / deg
    out[deg == 0] = np.nan
    return out


def node_homophily_classification(graph: SparseGraph, labels, node: int) -> float:
    """Fraction of ``node``'s neighbours sharing its label; NaN if isolated."""
    labels = _check_values(graph, labels)
    if np.isnan(labels[node]):
        raise InputError(f"node {node} has no label")
    nbrs = graph.neighbors(node)
    nbrs = nbrs[nbrs != node]
    if nbrs.size == 0:
        return float("nan")
    if np.any(np.isnan(labels[nbrs])):
        raise InputError(f"a neighbour of node {node} has no label")
    return float(np.mean(labels[nbrs] == labels[node]))


def node_homophily_regression(graph: SparseGraph, targets, node: int, normalizer: float | None = None) -> float:
    targets = _check_values(graph, targets)
    nbrs = graph.neighbors(node)
    nbrs = nbrs[nbrs != node]
    if nbrs.size == 0:
        return float("nan")
    if normalizer is None:
        normalizer = regression_normalizer(graph, targets)
    if normalizer == 0.0:
        return 1.0
    return float(1.0 - np.mean(np.abs(targets[nbrs] - targets[node])) / normalizer)


def graph_homophily(graph: SparseGraph, values, task: str) -> float:
    """Mean node homophily over non-isolated nodes."""
    if _off_diagonal(graph)[0].size == 0:
        raise InputError("graph has no edges; homophily is undefined")
    h = node_homophily(graph, values, task)
    return float(np.nanmean(h))


# ---------------------------------------------------------------------------
# clustering coefficient
# ---------------------------------------------------------------------------


def clustering_coefficients(graph: SparseGraph) -> np.ndarray:
    """Local clustering coefficient of every node on the unweighted graph."""
    a = graph.to_scipy()
    a.setdiag(0)
    a.eliminate_zeros()
    a.data[:] = 1.0
    tri = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel() / 2.0
    deg = np.asarray(a.sum(axis=1)).ravel()
    pairs = deg * (deg - 1.0) / 2.0
    out = np.zeros(graph.num_nodes)
    ok = deg >= 2
    out[ok] = tri[ok] / pairs[ok]
    return out


def clustering_coefficient(graph: SparseGraph, node: int) -> float:
    return float(clustering_coefficients(graph)[node])
