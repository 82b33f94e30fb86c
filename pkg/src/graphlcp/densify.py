"""Feature-aware densification with a homophily-driven threshold search."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _accel
from .embed import AnisotropicKernel
from .errors import InputError, ParameterError
from .graph import SparseGraph


@dataclass(frozen=True)
class DensifyConfig:
    tau0: float = 0.5
    gamma: float = 0.1
    max_iters: int = 20
    h: float = 2.0
    c: int = 8

    def __post_init__(self):
        if not 0.0 < self.tau0 < 1.0:
            raise ParameterError("tau0 must lie in (0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise ParameterError("gamma must lie in (0, 1)")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if self.h <= 0:
            raise ParameterError("h must be positive")
        if self.c < 1:
            raise ParameterError("c must be >= 1")


@dataclass
class DensifyReport:
    final_tau: float
    edge_ratio: float
    iterations_used: int
    edges_added: int
    rho_min: float
    rho_max: float
    trajectory: list  # (tau, rho) per iteration

    def to_dict(self) -> dict:
        return asdict(self)


def densification_bounds(eta: float, tau0: float) -> tuple[float, float]:
    """Target band ``[rho_min, rho_max]`` for the edge ratio.

    ``rho_max`` is infinite for a perfectly homophilous graph.
    """
    rho_min = 1.0 + min(eta, (1.0 - tau0) * 2.0)
    rho_max = math.inf if eta >= 1.0 else 1.0 / (1.0 - eta)
    return rho_min, rho_max


def candidate_pairs(z, kernel: AnisotropicKernel, tau: float):
    """All pairs ``i < j`` whose kernel value is at least ``tau``.

    Returns ``(rows, cols, values)``.
    """
    if tau <= 0:
        raise ParameterError("tau must be positive")
    bound = -2.0 * math.log(tau)
    zw = np.ascontiguousarray(kernel.whiten(z))
    rows, cols, d2 = _accel.pair_scan(zw, bound)
    return rows, cols, np.exp(-0.5 * d2)


def augment_edges(graph: SparseGraph, z, kernel: AnisotropicKernel, tau: float) -> tuple[SparseGraph, int]:
    """Add an edge of weight ``kernel(z_i, z_j)`` to every non-adjacent pair above ``tau``.

    Existing edges keep weight 1 regardless of their stored weight.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape[0] != graph.num_nodes:
        raise InputError("one embedding row per node required")
    n = graph.num_nodes
    rows, cols, vals = candidate_pairs(z, kernel, tau)
    src = graph.row_ids()
    existing = src * n + graph.indices
    fresh = ~np.isin(rows * n + cols, existing)
    rows, cols, vals = rows[fresh], cols[fresh], vals[fresh]
    # dense graph entries: originals at 1, plus both orientations of new ones
    all_r = np.concatenate([src, rows, cols])
    all_c = np.concatenate([graph.indices, cols, rows])
    all_w = np.concatenate([np.ones(graph.num_entries), vals, vals])
    order = np.lexsort((all_c, all_r))
    all_r, all_c, all_w = all_r[order], all_c[order], all_w[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(all_r, minlength=n), out=indptr[1:])
    return SparseGraph(n, indptr, all_c, all_w), int(rows.shape[0])


def search_threshold(
    graph: SparseGraph,
    z,
    kernel: AnisotropicKernel,
    cfg: DensifyConfig,
    eta: float,
) -> tuple[SparseGraph, DensifyReport]:
    """Adjust the threshold geometrically until the edge ratio lands in band.

    Each step densifies the original graph at the current threshold,
    measures ``rho``, stops if it is in band (or the budget is spent), and
    otherwise scales the threshold by ``1 - gamma`` (too few edges) or
    ``1 + gamma`` (too many).
    """
    base = graph.l1_norm
    if base <= 0:
        raise InputError("graph has no edges; edge ratio is undefined")
    rho_min, rho_max = densification_bounds(eta, cfg.tau0)
    tau = cfg.tau0
    trajectory = []
    for t in range(cfg.max_iters):
        dense, added = augment_edges(graph, z, kernel, tau)
        rho = dense.l1_norm / base
        trajectory.append((tau, rho))
        if rho_min <= rho <= rho_max or t == cfg.max_iters - 1:
            break
        if rho <= rho_min:
            tau *= 1.0 - cfg.gamma
        else:
            tau *= 1.0 + cfg.gamma
    report = DensifyReport(
        final_tau=tau,
        edge_ratio=rho,
        iterations_used=len(trajectory),
        edges_added=added,
        rho_min=rho_min,
        rho_max=rho_max,
        trajectory=[list(p) for p in trajectory],
    )
    return dense, report
