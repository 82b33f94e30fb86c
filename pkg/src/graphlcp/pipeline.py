"""End-to-end runs: densify, localize, predict, evaluate, report."""

from __future__ import annotations

import logging
import math

import numpy as np

from . import __version__
from .conformal import (
    CalibrationProfile,
    PredictionOutput,
    ScoreFunction,
    predict_graphlcp,
    predict_rlcp,
    predict_scp,
)
from .densify import DensifyConfig, DensifyReport, search_threshold
from .embed import AnisotropicKernel, PcaModel, fit_pca, project
from .errors import InputError
from .graph import SparseGraph, clustering_coefficients, graph_homophily, node_homophily
from .io import REPORT_SCHEMA, NodeTable, RunConfig
from .metrics import (
    coverage_by_group,
    covered_mask,
    kmeans3_groups,
    marginal_metrics,
    tercile_groups,
    worst_slab_coverage,
)
from .ppr import TransitionView

log = logging.getLogger(__name__)


def score_function(table: NodeTable, cfg: RunConfig) -> ScoreFunction:
    if cfg.score_kind is None:
        return ScoreFunction.default(table.task)
    return ScoreFunction(cfg.score_kind, table.task)


def calibration_profile(table: NodeTable, cfg: RunConfig) -> CalibrationProfile:
    calib = table.ids("calib")
    if np.any(np.isnan(table.labels[calib])):
        raise InputError("every calibration node needs a label")
    return CalibrationProfile.build(score_function(table, cfg), calib, table.predictions[calib], table.labels[calib])


def fit_projection(table: NodeTable, cfg: RunConfig) -> tuple[PcaModel, np.ndarray]:
    calib = table.ids("calib")
    c = min(cfg.c, calib.size - 1, table.embeddings.shape[1])
    if c != cfg.c:
        log.warning("PCA dimension reduced from %d to %d", cfg.c, c)
    model = fit_pca(table.embeddings[calib], c)
    return model, project(model, table.embeddings)


def densify_stage(graph: SparseGraph, table: NodeTable, cfg: RunConfig):
    """Homophily, PCA, kernel and threshold search; returns what later stages need."""
    known = ~np.isnan(table.labels)
    if not known.all():
        raise InputError("graph homophily needs labels for all nodes")
    eta = graph_homophily(graph, table.labels, table.task)
    model, z = fit_projection(table, cfg)
    kernel = AnisotropicKernel.from_pca(model, cfg.h)
    dcfg = DensifyConfig(tau0=cfg.tau0, gamma=cfg.gamma, max_iters=cfg.T, h=cfg.h, c=model.dim)
    dense, report = search_threshold(graph, z, kernel, dcfg, eta)
    log.info("densified: tau=%.4g rho=%.4g added=%d", report.final_tau, report.edge_ratio, report.edges_added)
    return {"eta": eta, "pca": model, "z": z, "kernel": kernel, "graph": dense, "report": report}


def predict(graph: SparseGraph, table: NodeTable, cfg: RunConfig, workers: int = 1, trace: list | None = None, stage=None):
    """Prediction outputs for the test split plus the densification stage (if any)."""
    profile = calibration_profile(table, cfg)
    test = table.ids("test")
    preds = table.predictions[test]
    if cfg.method == "scp":
        return predict_scp(profile, test, preds, cfg.alpha), None
    if cfg.method == "rlcp":
        emb = table.embeddings
        outs = predict_rlcp(
            profile, emb[profile.node_ids], test, emb[test], preds, cfg.rlcp_bandwidth, cfg.alpha, cfg.seed, trace, workers
        )
        return outs, None
    if stage is None:
        stage = densify_stage(graph, table, cfg)
    outs = predict_graphlcp(
        profile,
        TransitionView(stage["graph"]),
        test,
        preds,
        beta=cfg.beta,
        num_steps=cfg.K,
        alpha=cfg.alpha,
        seed=cfg.seed,
        variant=cfg.variant,
        z=stage["z"],
        kernel=stage["kernel"],
        trace=trace,
        workers=workers,
    )
    return outs, stage


def evaluate(graph: SparseGraph, table: NodeTable, outputs: list[PredictionOutput], cfg: RunConfig, z=None) -> dict | None:
    """Metric summary over test nodes with known labels; ``None`` if there are none."""
    ids = np.array([o.node_id for o in outputs], dtype=np.int64)
    if ids.size == 0:
        return None
    keep = ~np.isnan(table.labels[ids])
    if not keep.any():
        return None
    outs = [o for o, k in zip(outputs, keep) if k]
    ids = ids[keep]
    labels = table.labels[ids]
    covered = covered_mask(outs, labels)
    marg = marginal_metrics(outs, labels)
    if z is None:
        _, z = fit_projection(table, cfg)
    space = table.embeddings if cfg.wsc_space == "raw" else z
    summary = {
        "count": marg.count,
        "marginal_coverage": marg.coverage,
        "mean_length": marg.mean_length,
        "infinite_fraction": marg.infinite_fraction,
        "wsc": None,
        "wsc_slab": None,
        "group_min_coverage": {},
        "group_coverages": {},
        "partition_sizes": {},
    }
    if ids.size >= max(1, math.ceil(cfg.delta_wsc * ids.size)):
        wsc, slab = worst_slab_coverage(space[ids], covered, cfg.num_directions, cfg.delta_wsc, cfg.seed)
        summary["wsc"] = wsc
        summary["wsc_slab"] = {"direction": slab.direction, "lower": slab.lower, "upper": slab.upper, "mass": slab.mass}

    features = {}
    all_known = not np.any(np.isnan(table.labels))
    if all_known and graph.num_entries > 0:
        features["homophily"] = node_homophily(graph, table.labels, table.task)[ids]
    features["clustering"] = clustering_coefficients(graph)[ids]
    features["degree"] = graph.degrees[ids].astype(np.float64)
    for name, values in features.items():
        if np.sum(~np.isnan(values)) < 3:
            continue
        lo, per, sizes = coverage_by_group(covered, tercile_groups(values))
        summary["group_min_coverage"][name] = lo
        summary["group_coverages"][name] = per
        summary["partition_sizes"][name] = sizes
    if ids.size >= 3:
        lo, per, sizes = coverage_by_group(covered, kmeans3_groups(z[ids], cfg.seed), names=None)
        summary["group_min_coverage"]["feature_cluster"] = lo
        summary["group_coverages"]["feature_cluster"] = per
        summary["partition_sizes"]["feature_cluster"] = sizes
    return summary


def node_records(outputs: list[PredictionOutput], table: NodeTable) -> list[dict]:
    recs = []
    for o in outputs:
        rec = {"node_id": o.node_id, "quantile": o.quantile, "size": o.size}
        if o.label_set is not None:
            rec["label_set"] = list(o.label_set)
        else:
            rec["interval"] = [o.lower, o.upper]
        y = table.labels[o.node_id]
        rec["covered"] = None if np.isnan(y) else bool(o.contains(y))
        recs.append(rec)
    return recs


def run(graph: SparseGraph, table: NodeTable, cfg: RunConfig, workers: int = 1) -> dict:
    """Full run; returns the report as a plain dict."""
    outputs, stage = predict(graph, table, cfg, workers)
    dense_report: DensifyReport | None = stage["report"] if stage else None
    metrics = evaluate(graph, table, outputs, cfg, stage["z"] if stage else None)
    return {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "seed": cfg.seed,
        "task": table.task,
        "config": cfg.to_dict(),
        "homophily": stage["eta"] if stage else None,
        "densify": dense_report.to_dict() if dense_report else None,
        "pca": stage["pca"].to_dict() if stage else None,
        "metrics": metrics,
        "nodes": node_records(outputs, table),
    }


def synthetic_bundle(spec, num_layers: int = 2, fractions=None, split_seed: int | None = None):
    """SBM graph, surrogate embeddings and decoded predictions as ``(graph, NodeTable)``."""
    from .synth import DEFAULT_FRACTIONS, decode, encode, generate_sbm, make_splits

    graph, features, labels = generate_sbm(spec)
    emb = encode(graph, features, num_layers)
    splits = make_splits(spec.num_nodes, fractions or DEFAULT_FRACTIONS, spec.seed if split_seed is None else split_seed)
    train = np.nonzero(splits == "train")[0]
    num_classes = spec.num_blocks if spec.task == "classification" else None
    preds = decode(emb, train, labels[train], spec.task, num_classes)
    return graph, NodeTable(emb, labels, preds, splits)
