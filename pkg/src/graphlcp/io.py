"""File formats for bundles, run configuration and reports.

A bundle directory holds::

    edges.csv        src,dst            one undirected edge per row
    embeddings.csv   (no header)        row i = node i
    labels.csv       node_id,label      empty label = unknown
    predictions.csv  node_id,y_hat      regression
                     node_id,p_0,...    classification
    splits.csv       node_id,split      train|valid|calib|test

Floats are written with 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import InputError, ParameterError
from .graph import CLASSIFICATION, REGRESSION, SparseGraph, load_graph
from .synth import DEFAULT_FRACTIONS, SPLITS

BUNDLE_FILES = ("edges.csv", "embeddings.csv", "labels.csv", "predictions.csv", "splits.csv")
REPORT_SCHEMA = "graphlcp-report/1"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(eq=False)
class NodeTable:
    embeddings: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,), NaN = unknown
    predictions: np.ndarray  # (n,) regression or (n, C) class probabilities
    splits: np.ndarray  # (n,) split tokens

    @property
    def num_nodes(self) -> int:
        return int(self.embeddings.shape[0])

    @property
    def task(self) -> str:
        return CLASSIFICATION if self.predictions.ndim == 2 else REGRESSION

    def ids(self, split: str) -> np.ndarray:
        return np.nonzero(self.splits == split)[0]

    def with_splits(self, splits) -> "NodeTable":
        return NodeTable(self.embeddings, self.labels, self.predictions, np.asarray(splits).astype(str))


# ---------------------------------------------------------------------------
# bundle reading
# ---------------------------------------------------------------------------


def _open_csv(path: Path):
    if not path.is_file():
        raise FileNotFoundError(f"missing bundle file: {path}")
    return path.open(newline="", encoding="utf-8")


def _float(text: str, where: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise InputError(f"{where}: not a number: {text!r}") from None
    if not math.isfinite(v):
        raise InputError(f"{where}: non-finite value {text!r}")
    return v


def _header(reader, path: Path, expected: list[str] | None = None) -> list[str]:
    try:
        head = next(reader)
    except StopIteration:
        raise InputError(f"{path}: empty file") from None
    if expected is not None and head != expected:
        raise InputError(f"{path}: header {head} != {expected}")
    return head


def _node_rows(path: Path, num_nodes: int, rows: list[list[str]]) -> None:
    if len(rows) != num_nodes:
        raise InputError(f"{path}: {len(rows)} rows, expected {num_nodes}")
    for k, row in enumerate(rows):
        if not row or row[0].strip() != str(k):
            raise InputError(f"{path} row {k + 1}: expected node_id {k}, got {row[:1]}")


def read_embeddings(path: Path) -> np.ndarray:
    with _open_csv(path) as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty file")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for k, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"{path} row {k}: {len(row)} columns, expected {width}")
        out[k] = [_float(v, f"{path} row {k}") for v in row]
    return out


def read_edges(path: Path, num_nodes: int) -> SparseGraph:
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        _header(reader, path, ["src", "dst"])
        rows = []
        for k, row in enumerate(reader):
            try:
                rows.append((int(row[0]), int(row[1])))
            except (ValueError, IndexError):
                raise InputError(f"{path} row {k + 1}: malformed edge {row}") from None
    try:
        return load_graph(rows, num_nodes)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


def load_bundle(directory) -> tuple[SparseGraph, NodeTable]:
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"bundle directory not found: {root}")
    emb = read_embeddings(root / "embeddings.csv")
    n = emb.shape[0]

    with _open_csv(root / "labels.csv") as fh:
        reader = csv.reader(fh)
        _header(reader, root / "labels.csv", ["node_id", "label"])
        rows = list(reader)
    _node_rows(root / "labels.csv", n, rows)
    labels = np.array(
        [np.nan if r[1].strip() == "" else _float(r[1], f"labels.csv row {k + 1}") for k, r in enumerate(rows)]
    )

    path = root / "predictions.csv"
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        head = _header(reader, path)
        rows = list(reader)
    _node_rows(path, n, rows)
    if head == ["node_id", "y_hat"]:
        preds = np.array([_float(r[1], f"{path} row {k + 1}") for k, r in enumerate(rows)])
    elif head[0] == "node_id" and head[1:] == [f"p_{c}" for c in range(len(head) - 1)] and len(head) > 1:
        preds = np.empty((n, len(head) - 1))
        for k, r in enumerate(rows):
            if len(r) != len(head):
                raise InputError(f"{path} row {k + 1}: {len(r)} columns, expected {len(head)}")
            preds[k] = [_float(v, f"{path} row {k + 1}") for v in r[1:]]
    else:
        raise InputError(f"{path}: unrecognised header {head}")

    path = root / "splits.csv"
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        _header(reader, path, ["node_id", "split"])
        rows = list(reader)
    _node_rows(path, n, rows)
    splits = np.array([r[1].strip() for r in rows], dtype=str)
    for k, tok in enumerate(splits):
        if tok not in SPLITS:
            raise InputError(f"{path} row {k + 1}: unknown split token {tok!r}")

    graph = read_edges(root / "edges.csv", n)
    return graph, NodeTable(emb, labels, preds, splits)


# ---------------------------------------------------------------------------
# bundle writing
# ---------------------------------------------------------------------------


def write_edges(path: Path, graph: SparseGraph, with_weights: bool = False) -> None:
    src, dst, w = graph.edge_list()
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["src", "dst", "weight"] if with_weights else ["src", "dst"])
        for a, b, x in zip(src.tolist(), dst.tolist(), w.tolist()):
            out.writerow([a, b, fmt(x)] if with_weights else [a, b])


def save_bundle(directory, graph: SparseGraph, table: NodeTable) -> Path:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    write_edges(root / "edges.csv", graph)
    with (root / "embeddings.csv").open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        for row in table.embeddings:
            out.writerow([fmt(v) for v in row])
    is_int = table.task == CLASSIFICATION
    with (root / "labels.csv").open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["node_id", "label"])
        for k, y in enumerate(table.labels):
            text = "" if np.isnan(y) else (str(int(y)) if is_int else fmt(y))
            out.writerow([k, text])
    with (root / "predictions.csv").open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        if table.task == REGRESSION:
            out.writerow(["node_id", "y_hat"])
            for k, y in enumerate(table.predictions):
                out.writerow([k, fmt(y)])
        else:
            out.writerow(["node_id"] + [f"p_{c}" for c in range(table.predictions.shape[1])])
            for k, row in enumerate(table.predictions):
                out.writerow([k] + [fmt(v) for v in row])
    with (root / "splits.csv").open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["node_id", "split"])
        for k, s in enumerate(table.splits):
            out.writerow([k, s])
    return root


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

METHODS = ("scp", "rlcp", "graphlcp")
VARIANTS = ("ppr", "gss")


@dataclass
class RunConfig:
    alpha: float = 0.1
    method: str = "graphlcp"
    variant: str = "ppr"
    beta: float = 0.3
    K: int = 30
    h: float = 2.0
    rlcp_h: float | None = None  # RLCP bandwidth; defaults to h
    tau0: float = 0.5
    gamma: float = 0.1
    T: int = 20
    c: int = 8
    delta_wsc: float = 0.2
    num_directions: int = 100
    wsc_space: str = "raw"
    score_kind: str | None = None  # None: abs for regression, aps for classification
    seed: int = 0
    split_fractions: list = field(default_factory=lambda: list(DEFAULT_FRACTIONS))

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = [
            (0.0 < self.alpha < 1.0, "alpha must lie in (0, 1)"),
            (self.method in METHODS, f"method must be one of {METHODS}"),
            (self.variant in VARIANTS, f"variant must be one of {VARIANTS}"),
            (0.0 < self.beta <= 1.0, "beta must lie in (0, 1]"),
            (int(self.K) == self.K and self.K >= 0, "K must be a nonnegative integer"),
            (self.h > 0, "h must be positive"),
            (self.rlcp_h is None or self.rlcp_h > 0, "rlcp_h must be positive"),
            (0.0 < self.tau0 < 1.0, "tau0 must lie in (0, 1)"),
            (0.0 < self.gamma < 1.0, "gamma must lie in (0, 1)"),
            (int(self.T) == self.T and self.T >= 1, "T must be a positive integer"),
            (int(self.c) == self.c and self.c >= 1, "c must be a positive integer"),
            (0.0 < self.delta_wsc < 1.0, "delta_wsc must lie in (0, 1)"),
            (int(self.num_directions) == self.num_directions and self.num_directions >= 1, "num_directions must be >= 1"),
            (self.wsc_space in ("raw", "pca"), "wsc_space must be 'raw' or 'pca'"),
            (self.score_kind in (None, "abs", "aps", "thr"), "score_kind must be abs, aps or thr"),
            (isinstance(self.seed, int) and self.seed >= 0, "seed must be a nonnegative integer"),
            (
                len(self.split_fractions) == 4
                and all(f >= 0 for f in self.split_fractions)
                and abs(sum(self.split_fractions) - 1.0) <= 1e-9,
                "split_fractions must be 4 nonnegative numbers summing to 1",
            ),
        ]
        for ok, msg in checks:
            if not ok:
                raise ParameterError(msg)
        self.K, self.T, self.c, self.num_directions = int(self.K), int(self.T), int(self.c), int(self.num_directions)

    @property
    def rlcp_bandwidth(self) -> float:
        return self.h if self.rlcp_h is None else self.rlcp_h

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: config must be a JSON object")
    return RunConfig.from_dict(data)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dump_report(report: dict) -> str:
    # repr-based float output is the shortest string that round-trips exactly
    return json.dumps(to_jsonable(report), indent=2, sort_keys=True) + "\n"


def write_report(report: dict, path) -> None:
    Path(path).write_text(dump_report(report), encoding="utf-8")


def read_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_rows_csv(path, rows: list[dict]) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        if not rows:
            return
        out = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        out.writeheader()
        for row in rows:
            out.writerow({k: fmt(v) if isinstance(v, float) else v for k, v in row.items()})
