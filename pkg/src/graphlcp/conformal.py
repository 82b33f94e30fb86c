"""Nonconformity scores, weighted conformal quantiles and the predictors.

Three predictors share one set/interval construction:

* ``predict_scp``: split conformal with one global quantile.
* ``predict_rlcp``: randomly localized CP with an isotropic Gaussian kernel
  in embedding space.
* ``predict_graphlcp``: PPR anchor sampling and degree-corrected PPR
  weights on the densified graph (``variant="ppr"``), or an anisotropic
  Gaussian kernel on PCA embeddings with the same densified pipeline
  (``variant="gss"``).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .embed import AnisotropicKernel, isotropic_log_kernel
from .errors import InputError, ParameterError
from .graph import CLASSIFICATION, REGRESSION
from .ppr import TransitionView, ppr_power_iteration, sample_anchor, structural_weights
from .rng import node_stream

DEFAULT_ALPHA = 0.1
# slack on the cumulative-weight comparison; absorbs summation round-off
LEVEL_ATOL = 1e-12
WEIGHT_SUM_ATOL = 1e-9
PROB_SUM_ATOL = 1e-6

SCORE_KINDS = {"abs": REGRESSION, "aps": CLASSIFICATION, "thr": CLASSIFICATION}


@dataclass(frozen=True)
class ScoreFunction:
    kind: str
    task: str

    def __post_init__(self):
        if self.kind not in SCORE_KINDS:
            raise ParameterError(f"unknown score kind {self.kind!r}")
        if SCORE_KINDS[self.kind] != self.task:
            raise ParameterError(f"score {self.kind!r} cannot be used for {self.task}")

    @classmethod
    def default(cls, task: str) -> "ScoreFunction":
        return cls("abs" if task == REGRESSION else "aps", task)


def _check_probs(p: np.ndarray):
    if p.ndim != 2 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InputError("class probabilities must be finite and nonnegative")
    if np.any(np.abs(p.sum(axis=1) - 1.0) > PROB_SUM_ATOL):
        raise InputError("class probabilities must sum to 1")


def label_scores(score_fn: ScoreFunction, probs) -> np.ndarray:
    """Score of every candidate label, shape ``(m, C)``."""
    p = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    _check_probs(p)
    if score_fn.kind == "thr":
        return 1.0 - p
    # aps: mass of strictly more likely classes plus the label's own mass
    out = np.empty_like(p)
    for c in range(p.shape[1]):
        py = p[:, c : c + 1]
        out[:, c] = np.where(p > py, p, 0.0).sum(axis=1) + py[:, 0]
    return out


def scores(score_fn: ScoreFunction, predictions, labels) -> np.ndarray:
    """Vectorised :func:`score` over many nodes."""
    labels = np.asarray(labels, dtype=np.float64)
    if score_fn.task == REGRESSION:
        return np.abs(labels - np.asarray(predictions, dtype=np.float64))
    table = label_scores(score_fn, predictions)
    y = labels.astype(np.int64)
    if np.any(y < 0) or np.any(y >= table.shape[1]) or np.any(y != labels):
        raise InputError("class labels must be integers in [0, C)")
    return table[np.arange(y.shape[0]), y]


def score(score_fn: ScoreFunction, prediction, label) -> float:
    if score_fn.task == REGRESSION:
        return abs(float(label) - float(prediction))
    return float(scores(score_fn, np.atleast_2d(prediction), [label])[0])


@dataclass(frozen=True, eq=False)
class CalibrationProfile:
    node_ids: np.ndarray
    scores: np.ndarray
    score_fn: ScoreFunction

    def __post_init__(self):
        if self.node_ids.shape != self.scores.shape:
            raise InputError("one score per calibration node")
        if np.any(~np.isfinite(self.scores)) or np.any(self.scores < 0):
            raise InputError("calibration scores must be finite and nonnegative")

    @classmethod
    def build(cls, score_fn: ScoreFunction, node_ids, predictions, labels) -> "CalibrationProfile":
        ids = np.asarray(node_ids, dtype=np.int64)
        return cls(ids, scores(score_fn, predictions, labels), score_fn)

    @property
    def size(self) -> int:
        return int(self.scores.shape[0])


@dataclass
class PredictionOutput:
    node_id: int
    quantile: float
    lower: float | None = None
    upper: float | None = None
    label_set: tuple[int, ...] | None = None

    @property
    def size(self) -> float:
        """Interval length (regression) or set cardinality (classification)."""
        if self.label_set is not None:
            return float(len(self.label_set))
        return self.upper - self.lower

    def contains(self, label) -> bool:
        if self.label_set is not None:
            return int(label) in self.label_set
        return self.lower <= float(label) <= self.upper


# ---------------------------------------------------------------------------
# quantiles
# ---------------------------------------------------------------------------


def weighted_quantile(scores, weights, test_weight: float, alpha: float) -> float:
    """Level ``1 - alpha`` quantile of ``sum_i w_i delta_{s_i} + w_test delta_{+inf}``.

    Equal scores pool their weight. Returns ``inf`` when only the infinite
    atom reaches the level.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError("alpha must lie in (0, 1)")
    s = np.asarray(scores, dtype=np.float64).ravel()
    w = np.asarray(weights, dtype=np.float64).ravel()
    if s.shape != w.shape:
        raise InputError("scores and weights differ in length")
    if np.any(w < 0) or test_weight < 0:
        raise InputError("weights must be nonnegative")
    if abs(w.sum() + test_weight - 1.0) > WEIGHT_SUM_ATOL:
        raise InputError(f"weights sum to {w.sum() + test_weight!r}, expected 1")
    if s.size == 0:
        return math.inf
    order = np.argsort(s, kind="stable")
    s, w = s[order], w[order]
    cum = np.cumsum(w)
    level = 1.0 - alpha - LEVEL_ATOL
    # last index of each run of equal scores carries the pooled cumulative weight
    last = np.nonzero(np.append(s[1:] != s[:-1], True))[0]
    hit = np.nonzero(cum[last] >= level)[0]
    if hit.size == 0:
        return math.inf
    return float(s[last[hit[0]]])


def scp_quantile(profile: CalibrationProfile, alpha: float) -> float:
    n = profile.size
    if n == 0:
        return math.inf
    w = np.full(n, 1.0 / (n + 1))
    return weighted_quantile(profile.scores, w, 1.0 - w.sum(), alpha)


# ---------------------------------------------------------------------------
# set construction
# ---------------------------------------------------------------------------


def build_output(score_fn: ScoreFunction, node_id: int, prediction, q: float) -> PredictionOutput:
    if score_fn.task == REGRESSION:
        y_hat = float(prediction)
        return PredictionOutput(int(node_id), q, y_hat - q, y_hat + q)
    row = label_scores(score_fn, np.atleast_2d(prediction))[0]
    labels = tuple(int(c) for c in np.nonzero(row <= q)[0])
    return PredictionOutput(int(node_id), q, label_set=labels)


def predict_scp(profile: CalibrationProfile, test_ids, test_predictions, alpha: float = DEFAULT_ALPHA) -> list[PredictionOutput]:
    q = scp_quantile(profile, alpha)
    preds = np.asarray(test_predictions, dtype=np.float64)
    return [build_output(profile.score_fn, node, preds[k], q) for k, node in enumerate(test_ids)]


def _normalized_from_logs(logw: np.ndarray) -> np.ndarray:
    top = logsumexp(logw)
    if not np.isfinite(top):
        w = np.zeros_like(logw)
        w[-1] = 1.0
        return w
    w = np.exp(logw - top)
    return w / w.sum()


def _parallel_map(fn: Callable[[int], object], count: int, workers: int) -> list:
    if workers <= 1 or count < 2:
        return [fn(k) for k in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _finish(profile, node, pred, w, alpha, trace, anchor=None):
    q = weighted_quantile(profile.scores, w[:-1], w[-1], alpha)
    if trace is not None:
        trace.append({"node_id": int(node), "anchor": anchor, "calib_weights": w[:-1], "test_weight": float(w[-1])})
    return build_output(profile.score_fn, node, pred, q)


def rlcp_weights(calib_x: np.ndarray, test_x: np.ndarray, anchor_x: np.ndarray, h: float) -> np.ndarray:
    """Normalized isotropic kernel weights at the anchor; test weight last."""
    pts = np.vstack([calib_x, test_x[None, :]])
    return _normalized_from_logs(isotropic_log_kernel(h, pts, anchor_x[None, :]))


def predict_rlcp(
    profile: CalibrationProfile,
    calib_embeddings,
    test_ids: Sequence[int],
    test_embeddings,
    test_predictions,
    h: float,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    trace: list | None = None,
    workers: int = 1,
) -> list[PredictionOutput]:
    """Anchor ``x + h * g`` with ``g ~ N(0, I)``, kernel weights at the anchor."""
    if h <= 0:
        raise ParameterError("bandwidth h must be positive")
    cx = np.asarray(calib_embeddings, dtype=np.float64)
    tx = np.asarray(test_embeddings, dtype=np.float64)
    preds = np.asarray(test_predictions, dtype=np.float64)
    records: list = [None] * len(test_ids)

    def one(k: int):
        node = int(test_ids[k])
        rng = node_stream(seed, node)
        anchor = tx[k] + h * rng.standard_normal(tx.shape[1])
        w = rlcp_weights(cx, tx[k], anchor, h)
        local = [] if trace is not None else None
        out = _finish(profile, node, preds[k], w, alpha, local)
        if local:
            records[k] = local[0]
        return out

    outs = _parallel_map(one, len(test_ids), workers)
    if trace is not None:
        trace.extend(records)
    return outs


def gss_weights(calib_z: np.ndarray, test_z: np.ndarray, anchor_z: np.ndarray, kernel: AnisotropicKernel) -> np.ndarray:
    pts = np.vstack([calib_z, test_z[None, :]])
    return _normalized_from_logs(-0.5 * kernel.sq_distance(pts, anchor_z[None, :]))


def predict_graphlcp(
    profile: CalibrationProfile,
    transition: TransitionView,
    test_ids: Sequence[int],
    test_predictions,
    beta: float = 0.3,
    num_steps: int = 30,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    variant: str = "ppr",
    z=None,
    kernel: AnisotropicKernel | None = None,
    trace: list | None = None,
    workers: int = 1,
) -> list[PredictionOutput]:
    """Localized CP on the densified graph.

    ``variant="ppr"`` samples the anchor by a truncated geometric walk and
    weights nodes by ``pi_anchor[i] / d_i``. ``variant="gss"`` samples the
    anchor from the anisotropic Gaussian around the test node's projected
    embedding ``z`` and weights by the same kernel.
    """
    if variant not in ("ppr", "gss"):
        raise ParameterError(f"unknown variant {variant!r}")
    if variant == "gss" and (z is None or kernel is None):
        raise ParameterError("gss variant needs projected embeddings and a kernel")
    preds = np.asarray(test_predictions, dtype=np.float64)
    calib = profile.node_ids
    records: list = [None] * len(test_ids)
    if variant == "gss":
        z = np.asarray(z, dtype=np.float64)
        calib_z = z[calib]
        std = np.sqrt(kernel.scale)

    def one(k: int):
        node = int(test_ids[k])
        rng = node_stream(seed, node)
        if variant == "ppr":
            anchor = sample_anchor(transition, node, beta, num_steps, rng)
            mass = ppr_power_iteration(transition, anchor, beta, num_steps).mass
            w = structural_weights(transition, anchor, calib, node, beta, num_steps, mass=mass).weights
            anchor_rec = int(anchor)
        else:
            anchor_z = z[node] + std * rng.standard_normal(z.shape[1])
            w = gss_weights(calib_z, z[node], anchor_z, kernel)
            anchor_rec = None
        local = [] if trace is not None else None
        out = _finish(profile, node, preds[k], w, alpha, local, anchor_rec)
        if local:
            records[k] = local[0]
        return out

    outs = _parallel_map(one, len(test_ids), workers)
    if trace is not None:
        trace.extend(records)
    return outs
