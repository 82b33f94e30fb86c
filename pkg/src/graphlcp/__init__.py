"""Structure-aware localized conformal prediction for node-level tasks on graphs."""

__version__ = "0.1.0"

from ._accel import BACKEND  # noqa: E402
from .conformal import (  # noqa: E402
    CalibrationProfile,
    PredictionOutput,
    ScoreFunction,
    predict_graphlcp,
    predict_rlcp,
    predict_scp,
    scp_quantile,
    weighted_quantile,
)
from .densify import DensifyConfig, augment_edges, densification_bounds, search_threshold  # noqa: E402
from .embed import AnisotropicKernel, PcaModel, fit_pca, project  # noqa: E402
from .graph import SparseGraph, graph_homophily, load_graph  # noqa: E402
from .io import NodeTable, RunConfig, load_bundle, save_bundle  # noqa: E402
from .ppr import TransitionView, ppr_power_iteration, sample_anchor, structural_weights  # noqa: E402

__all__ = [
    "BACKEND",
    "AnisotropicKernel",
    "CalibrationProfile",
    "DensifyConfig",
    "NodeTable",
    "PcaModel",
    "PredictionOutput",
    "RunConfig",
    "ScoreFunction",
    "SparseGraph",
    "TransitionView",
    "augment_edges",
    "densification_bounds",
    "fit_pca",
    "graph_homophily",
    "load_bundle",
    "load_graph",
    "ppr_power_iteration",
    "predict_graphlcp",
    "predict_rlcp",
    "predict_scp",
    "project",
    "sample_anchor",
    "save_bundle",
    "scp_quantile",
    "search_threshold",
    "structural_weights",
    "weighted_quantile",
]
