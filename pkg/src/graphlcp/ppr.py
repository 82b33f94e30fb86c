"""Truncated Personalized PageRank, anchor sampling and structural weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import ParameterError
from .graph import SparseGraph

DEFAULT_BETA = 0.3
DEFAULT_STEPS = 30


def _check(beta: float, num_steps: int):
    if not 0.0 < beta <= 1.0:
        raise ParameterError("beta must lie in (0, 1]")
    if num_steps < 0:
        raise ParameterError("K must be >= 0")


class TransitionView:
    """Row-stochastic walk ``M = D^-1 A`` over a (possibly densified) graph.

    Nodes without incident weight are absorbing.
    """

    def __init__(self, graph: SparseGraph):
        self.graph = graph
        deg = graph.weighted_degrees
        self.isolated = deg <= 0.0
        inv = np.zeros_like(deg)
        inv[~self.isolated] = 1.0 / deg[~self.isolated]
        rows = graph.row_ids()
        self.probs = np.ascontiguousarray(graph.weights * inv[rows])
        # within-row cumulative probabilities, computed row by row to avoid
        # cancellation from a global running sum
        cum = np.empty_like(self.probs)
        indptr = graph.indptr
        for i in np.nonzero(np.diff(indptr) > 0)[0]:
            lo, hi = indptr[i], indptr[i + 1]
            cum[lo:hi] = np.cumsum(self.probs[lo:hi])
            cum[hi - 1] = 1.0
        self.keys = np.ascontiguousarray(rows + cum)
        self.indptr = graph.indptr
        self.indices = graph.indices

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def degrees(self) -> np.ndarray:
        return self.graph.weighted_degrees


@dataclass(frozen=True, eq=False)
class PprVector:
    seed: int
    beta: float
    num_steps: int
    mass: np.ndarray

    def normalized(self) -> np.ndarray:
        return self.mass / self.mass.sum()


def ppr_power_iteration(t: TransitionView, seed: int, beta: float = DEFAULT_BETA, num_steps: int = DEFAULT_STEPS) -> PprVector:
    """``sum_{k=0..K} beta (1-beta)^k e_seed M^k`` by the row-vector recursion.

    No renormalization: total mass is ``1 - (1-beta)^(K+1)``.
    """
    _check(beta, num_steps)
    mass = _accel.ppr_truncated(t.indptr, t.indices, t.probs, t.isolated, int(seed), float(beta), int(num_steps))
    return PprVector(int(seed), float(beta), int(num_steps), mass)


def sample_walk_length(beta: float, num_steps: int, rng: np.random.Generator) -> int:
    """Geometric length on ``{0, 1, ...}``, rejected and redrawn above ``K``."""
    _check(beta, num_steps)
    while True:
        k = int(rng.geometric(beta)) - 1
        if k <= num_steps:
            return k


def sample_walk_lengths(beta: float, num_steps: int, rng: np.random.Generator, size: int) -> np.ndarray:
    _check(beta, num_steps)
    out = rng.geometric(beta, size=size) - 1
    bad = out > num_steps
    while bad.any():
        out[bad] = rng.geometric(beta, size=int(bad.sum())) - 1
        bad = out > num_steps
    return out.astype(np.int64)


def sample_anchor(t: TransitionView, test: int, beta: float, num_steps: int, rng: np.random.Generator) -> int:
    """Landing node of a weighted walk from ``test`` with a truncated geometric length."""
    k = sample_walk_length(beta, num_steps, rng)
    uniforms = rng.random(k)
    return int(_accel.random_walk(t.indptr, t.indices, t.keys, int(test), uniforms))


def sample_anchors(t: TransitionView, test: int, beta: float, num_steps: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Many independent anchors for one test node (Monte Carlo use)."""
    lengths = sample_walk_lengths(beta, num_steps, rng, size)
    uniforms = rng.random(int(lengths.sum()))
    starts = np.full(size, int(test), dtype=np.int64)
    return np.asarray(_accel.random_walk_many(t.indptr, t.indices, t.keys, starts, lengths, uniforms))


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Normalized weights; ``indices[-1]`` is the test node."""

    indices: np.ndarray
    weights: np.ndarray

    @property
    def calib_weights(self) -> np.ndarray:
        return self.weights[:-1]

    @property
    def test_weight(self) -> float:
        return float(self.weights[-1])


def structural_weights(
    t: TransitionView,
    anchor: int,
    calib_ids,
    test_id: int,
    beta: float = DEFAULT_BETA,
    num_steps: int = DEFAULT_STEPS,
    mass: np.ndarray | None = None,
) -> WeightVector:
    """Degree-corrected PPR weights ``pi_anchor[i] / d_i`` over calibration plus test.

    ``mass`` may carry a precomputed PPR vector seeded at ``anchor``. When
    nothing is reachable all weight goes to the test node.
    """
    calib_ids = np.asarray(calib_ids, dtype=np.int64)
    ids = np.concatenate([calib_ids, [int(test_id)]])
    if mass is None:
        mass = ppr_power_iteration(t, anchor, beta, num_steps).mass
    deg = t.degrees[ids]
    raw = np.zeros(ids.shape[0])
    ok = deg > 0
    raw[ok] = mass[ids[ok]] / deg[ok]
    # absorbing nodes have no degree; only the anchor itself can carry mass
    raw[~ok] = mass[ids[~ok]]
    total = raw.sum()
    if total <= 0:
        w = np.zeros(ids.shape[0])
        w[-1] = 1.0
    else:
        w = raw / total
    return WeightVector(ids, w)
