"""Coverage diagnostics: marginal, worst-slab, group-based, and weight ECDFs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _accel
from .conformal import PredictionOutput
from .errors import InputError, ParameterError
from .rng import stream

ECDF_KNOTS = 512


@dataclass
class MarginalMetrics:
    coverage: float
    mean_length: float | None  # over finite sets/intervals only
    infinite_fraction: float
    count: int


@dataclass
class SlabSpec:
    direction: np.ndarray
    lower: float
    upper: float
    mass: float


@dataclass
class MetricReport:
    marginal_coverage: float
    mean_length: float | None
    infinite_fraction: float
    wsc: float | None
    slab: SlabSpec | None
    group_min_coverage: dict = field(default_factory=dict)
    group_coverages: dict = field(default_factory=dict)
    partition_sizes: dict = field(default_factory=dict)


def covered_mask(outputs: Sequence[PredictionOutput], labels) -> np.ndarray:
    labels = np.asarray(labels)
    return np.array([o.contains(y) for o, y in zip(outputs, labels)], dtype=bool)


def marginal_metrics(outputs: Sequence[PredictionOutput], labels) -> MarginalMetrics:
    """Coverage and mean size; infinite sets count as covered but not in the mean."""
    m = len(outputs)
    if m == 0:
        return MarginalMetrics(float("nan"), None, 0.0, 0)
    cov = covered_mask(outputs, labels)
    sizes = np.array([o.size for o in outputs])
    finite = np.isfinite(sizes)
    mean_len = float(sizes[finite].mean()) if finite.any() else None
    return MarginalMetrics(float(cov.mean()), mean_len, float(1.0 - finite.mean()), m)


# ---------------------------------------------------------------------------
# worst-slab coverage
# ---------------------------------------------------------------------------


def random_directions(dim: int, count: int, seed: int) -> np.ndarray:
    g = stream(seed, 0x57C).standard_normal((count, dim))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return g / norms


def min_slab(proj: np.ndarray, covered: np.ndarray, min_count: int) -> tuple[float, int, int, np.ndarray]:
    """Lowest coverage over sorted windows of at least ``min_count`` points.

    Returns ``(coverage, start, stop, order)`` with the window
    ``order[start:stop]``.
    """
    order = np.argsort(proj, kind="stable")
    vals = np.ascontiguousarray(covered[order].astype(np.int64))
    num, den, i, j = _accel.min_density_window(vals, int(min_count))
    return num / den, int(i), int(j), order


def worst_slab_coverage(
    embeddings,
    covered,
    num_directions: int = 100,
    delta: float = 0.2,
    seed: int = 0,
    directions: np.ndarray | None = None,
) -> tuple[float, SlabSpec]:
    """Minimum coverage over slabs ``{x : a <= v.x <= b}`` holding >= delta of the points."""
    x = np.asarray(embeddings, dtype=np.float64)
    covered = np.asarray(covered, dtype=bool)
    if x.ndim != 2 or x.shape[0] != covered.shape[0]:
        raise InputError("one embedding row per covered flag")
    if not 0.0 < delta < 1.0:
        raise ParameterError("delta must lie in (0, 1)")
    if num_directions < 1 and directions is None:
        raise ParameterError("need at least one direction")
    m = x.shape[0]
    min_count = max(1, math.ceil(delta * m - 1e-9))
    if m == 0 or m < min_count:
        raise InputError(f"need at least {min_count} points for delta={delta}")
    if directions is None:
        directions = random_directions(x.shape[1], num_directions, seed)
    best = None
    for v in directions:
        proj = x @ v
        cov, i, j, order = min_slab(proj, covered, min_count)
        if best is None or cov < best[0]:
            s = proj[order]
            best = (cov, SlabSpec(np.array(v), float(s[i]), float(s[j - 1]), (j - i) / m))
    return best


# ---------------------------------------------------------------------------
# group diagnostics
# ---------------------------------------------------------------------------


def tercile_groups(feature) -> np.ndarray:
    """Group id 0/1/2 (low/mid/high) per node; -1 where the feature is undefined.

    Cut points are the order statistics at ranks ceil(m/3) and ceil(2m/3);
    values equal to a cut point go to the lower group.
    """
    f = np.asarray(feature, dtype=np.float64)
    ok = ~np.isnan(f)
    vals = np.sort(f[ok])
    m = vals.shape[0]
    if m < 3:
        raise InputError("terciles need at least 3 defined values")
    t1 = vals[math.ceil(m / 3) - 1]
    t2 = vals[math.ceil(2 * m / 3) - 1]
    groups = np.full(f.shape[0], -1, dtype=np.int64)
    groups[ok] = np.where(f[ok] <= t1, 0, np.where(f[ok] <= t2, 1, 2))
    return groups


def kmeans3_groups(embeddings, seed: int = 0, max_iter: int = 50) -> np.ndarray:
    """k-means (k=3) with farthest-point initialisation from a seeded first centre."""
    from sklearn.cluster import KMeans

    x = np.asarray(embeddings, dtype=np.float64)
    k = min(3, x.shape[0])
    first = int(stream(seed, 0x6B3).integers(x.shape[0]))
    centres = [x[first]]
    dist = np.sum((x - centres[0]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(dist))
        centres.append(x[nxt])
        dist = np.minimum(dist, np.sum((x - x[nxt]) ** 2, axis=1))
    init = np.array(centres)
    if np.unique(init, axis=0).shape[0] < k:
        # duplicate points; one cluster is all we can say
        return np.zeros(x.shape[0], dtype=np.int64)
    km = KMeans(n_clusters=k, init=init, n_init=1, max_iter=max_iter, algorithm="lloyd")
    return km.fit_predict(x).astype(np.int64)


GROUP_NAMES = ("low", "mid", "high")


def coverage_by_group(covered, groups, names=GROUP_NAMES) -> tuple[float, dict[str, float], dict[str, int]]:
    """Coverage per group id (ids < 0 are skipped); returns ``(min, per_group, sizes)``."""
    covered = np.asarray(covered, dtype=bool)
    groups = np.asarray(groups)
    per, sizes = {}, {}
    for g in np.unique(groups[groups >= 0]):
        name = names[g] if names is not None and g < len(names) else f"cluster_{g}"
        mask = groups == g
        per[name] = float(covered[mask].mean())
        sizes[name] = int(mask.sum())
    if not per:
        raise InputError("no defined groups")
    return min(per.values()), per, sizes


def group_min_coverage(feature, covered, mode: str = "terciles", embeddings=None, seed: int = 0):
    """Min per-group coverage with groups from terciles of ``feature`` or k-means on ``embeddings``."""
    if mode == "terciles":
        groups = tercile_groups(feature)
    elif mode == "kmeans3":
        if embeddings is None:
            raise InputError("kmeans3 needs embeddings")
        return coverage_by_group(covered, kmeans3_groups(embeddings, seed), names=None)
    else:
        raise ParameterError(f"unknown grouping mode {mode!r}")
    return coverage_by_group(covered, groups)


# ---------------------------------------------------------------------------
# weight ECDFs
# ---------------------------------------------------------------------------


def ecdf_at(values, knots) -> np.ndarray:
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if v.size == 0:
        return np.full(len(knots), np.nan)
    return np.searchsorted(v, knots, side="right") / v.size


def weight_ecdf_diagnostic(traces: dict, knots: int = ECDF_KNOTS) -> list[dict]:
    """ECDF rows for calibration and test weights at each bandwidth.

    ``traces`` maps bandwidth to the trace list filled by a predictor. Knots
    are evenly spaced on [0, 1], the range of a normalized weight.
    """
    grid = np.linspace(0.0, 1.0, knots)
    rows = []
    for bw in sorted(traces):
        recs = [r for r in traces[bw] if r is not None]
        calib = np.concatenate([np.asarray(r["calib_weights"]) for r in recs]) if recs else np.empty(0)
        test = np.array([r["test_weight"] for r in recs])
        for kind, vals in (("calib", calib), ("test", test)):
            for x, f in zip(grid, ecdf_at(vals, grid)):
                rows.append({"bandwidth": float(bw), "kind": kind, "weight": float(x), "ecdf": float(f)})
    return rows
