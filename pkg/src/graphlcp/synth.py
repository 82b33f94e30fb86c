"""Desk-scale synthetic bundles: SBM graphs, a propagation encoder, closed-form decoders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InputError, ParameterError
from .graph import CLASSIFICATION, REGRESSION, TASKS, SparseGraph
from .rng import stream

SPLITS = ("train", "valid", "calib", "test")
DEFAULT_FRACTIONS = (0.4, 0.1, 0.1, 0.4)


@dataclass(frozen=True)
class SbmSpec:
    num_nodes: int = 800
    num_blocks: int = 4
    intra_prob: float = 0.05
    inter_prob: float = 0.005
    feature_dim: int = 16
    label_noise: float = 0.0
    task: str = CLASSIFICATION
    seed: int = 0
    feature_noise: float = 1.0

    def __post_init__(self):
        if self.num_nodes < 1 or self.num_blocks < 1 or self.feature_dim < 1:
            raise ParameterError("num_nodes, num_blocks and feature_dim must be positive")
        for name in ("intra_prob", "inter_prob", "label_noise"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1]")
        if self.task not in TASKS:
            raise ParameterError(f"unknown task {self.task!r}")


def block_assignment(num_nodes: int, num_blocks: int) -> np.ndarray:
    """Contiguous blocks whose sizes differ by at most one."""
    return (np.arange(num_nodes) * num_blocks) // num_nodes


def generate_sbm(spec: SbmSpec) -> tuple[SparseGraph, np.ndarray, np.ndarray]:
    """Return ``(graph, features, labels_or_targets)``.

    Classification labels are block ids (optionally resampled with
    probability ``label_noise``); regression targets are the block index
    plus Gaussian jitter of scale ``label_noise``. Features are noisy
    prototypes of the block.
    """
    rng = stream(spec.seed, 0x5B)
    n, b = spec.num_nodes, spec.num_blocks
    blocks = block_assignment(n, b)
    iu, ju = np.triu_indices(n, k=1)
    same = blocks[iu] == blocks[ju]
    prob = np.where(same, spec.intra_prob, spec.inter_prob)
    hit = rng.random(iu.shape[0]) < prob
    graph = SparseGraph.from_entries(n, iu[hit], ju[hit])

    protos = rng.standard_normal((b, spec.feature_dim))
    if spec.feature_dim >= b:
        protos = 2.0 * np.eye(b, spec.feature_dim)
    features = protos[blocks] + spec.feature_noise * rng.standard_normal((n, spec.feature_dim))

    if spec.task == CLASSIFICATION:
        labels = blocks.astype(np.float64)
        flip = rng.random(n) < spec.label_noise
        labels[flip] = rng.integers(0, b, size=int(flip.sum()))
    else:
        labels = blocks.astype(np.float64) + spec.label_noise * rng.standard_normal(n)
    return graph, features, labels


def propagation_matrix(graph: SparseGraph) -> sp.csr_matrix:
    """``(D+I)^-1/2 (A+I) (D+I)^-1/2`` on the unweighted graph."""
    a = graph.to_scipy().copy()
    a.data[:] = 1.0
    a = a + sp.identity(graph.num_nodes, format="csr")
    d = np.asarray(a.sum(axis=1)).ravel()
    s = sp.diags(1.0 / np.sqrt(d))
    return (s @ a @ s).tocsr()


def encode(graph: SparseGraph, features, num_layers: int = 2) -> np.ndarray:
    """Linear message passing ``X <- A_hat X`` repeated ``num_layers`` times."""
    if num_layers < 0:
        raise ParameterError("num_layers must be >= 0")
    x = np.array(features, dtype=np.float64)
    if x.shape[0] != graph.num_nodes:
        raise InputError("one feature row per node required")
    if num_layers == 0:
        return x
    p = propagation_matrix(graph)
    for _ in range(num_layers):
        x = p @ x
    return np.asarray(x)


def ridge_fit(x, y, reg: float | None = None) -> tuple[np.ndarray, float]:
    """Ridge coefficients on centred data plus an unpenalized intercept.

    The default penalty is ``1e-3 * trace(Xc^T Xc) / d``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mx, my = x.mean(axis=0), y.mean()
    xc = x - mx
    gram = xc.T @ xc
    if reg is None:
        reg = 1e-3 * np.trace(gram) / x.shape[1]
    coef = np.linalg.solve(gram + reg * np.eye(x.shape[1]), xc.T @ (y - my))
    return coef, float(my - mx @ coef)


def centroid_softmax(x, centroids, temperature: float) -> np.ndarray:
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    logits = -d2 / temperature
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    return p / p.sum(axis=1, keepdims=True)


def decode(embeddings, train_ids, train_labels, task: str, num_classes: int | None = None) -> np.ndarray:
    """Closed-form predictions for every node from the train rows only.

    Regression uses ridge regression; classification a nearest-centroid
    softmax whose temperature is the mean squared distance of train rows to
    their class centroid.
    """
    z = np.asarray(embeddings, dtype=np.float64)
    train_ids = np.asarray(train_ids, dtype=np.int64)
    if train_ids.size == 0:
        raise InputError("train split is empty")
    y = np.asarray(train_labels, dtype=np.float64)
    if task == REGRESSION:
        coef, b0 = ridge_fit(z[train_ids], y)
        return z @ coef + b0
    labels = y.astype(np.int64)
    num_classes = int(labels.max()) + 1 if num_classes is None else num_classes
    present = np.bincount(labels, minlength=num_classes)
    if np.any(present == 0):
        raise InputError(f"classes {np.nonzero(present == 0)[0].tolist()} absent from the train split")
    zt = z[train_ids]
    cents = np.stack([zt[labels == c].mean(axis=0) for c in range(num_classes)])
    temp = float(np.mean(np.sum((zt - cents[labels]) ** 2, axis=1)))
    if temp <= 0:
        temp = 1e-12
    return centroid_softmax(z, cents, temp)


def make_splits(num_nodes: int, fractions=DEFAULT_FRACTIONS, seed: int = 0) -> np.ndarray:
    """Uniform random split tokens with the given (train, valid, calib, test) fractions."""
    f = np.asarray(fractions, dtype=np.float64)
    if f.shape != (4,) or np.any(f < 0) or abs(f.sum() - 1.0) > 1e-9:
        raise ParameterError("split fractions must be 4 nonnegative numbers summing to 1")
    counts = np.floor(f * num_nodes).astype(np.int64)
    counts[3] = num_nodes - counts[:3].sum()
    tokens = np.repeat(np.array(SPLITS), counts)
    perm = stream(seed, 0x5B1).permutation(num_nodes)
    out = np.empty(num_nodes, dtype=object)
    out[perm] = tokens
    return out.astype(str)


def resample_calib_test(splits, seed: int) -> np.ndarray:
    """Reshuffle calib/test membership inside their pooled nodes, sizes kept."""
    splits = np.asarray(splits).astype(str)
    pool = np.nonzero((splits == "calib") | (splits == "test"))[0]
    n_calib = int((splits == "calib").sum())
    perm = stream(seed, 0xCA1).permutation(pool)
    out = splits.copy()
    out[perm[:n_calib]] = "calib"
    out[perm[n_calib:]] = "test"
    return out
