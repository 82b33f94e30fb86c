"""Command-line entry point: ``graphlcp {run,densify,eval,synth,sweep}``.

Exit status is 0 on success and 2 on invalid input, configuration or
missing files. Log verbosity comes from ``GRAPHLCP_LOG_LEVEL``.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

import numpy as np

from . import __version__
from .conformal import PredictionOutput
from .errors import GraphLCPError
from .io import (
    METHODS,
    RunConfig,
    dump_report,
    load_bundle,
    load_config,
    read_report,
    save_bundle,
    to_jsonable,
    write_rows_csv,
)
from .pipeline import densify_stage, evaluate, run, synthetic_bundle
from .synth import DEFAULT_FRACTIONS, SbmSpec

EXIT_OK = 0
EXIT_INVALID = 2

log = logging.getLogger("graphlcp")


def _config_epilog() -> str:
    lines = ["config file keys (JSON object) and defaults:"]
    for f in dataclasses.fields(RunConfig):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        lines.append(f"  {f.name} = {default!r}")
    return "\n".join(lines)


def _fractions(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad fractions {text!r}") from None
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("need 4 comma-separated fractions")
    return vals


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    data = cfg.to_dict()
    if getattr(args, "method", None):
        data["method"] = args.method
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    return RunConfig.from_dict(data)


def _write_text(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = _resolve_config(args)
    graph, table = load_bundle(args.data)
    report = run(graph, table, cfg, workers=args.parallel)
    _write_text(args.out, dump_report(report))
    m = report["metrics"]
    if m is not None:
        log.info("coverage=%.4f mean_length=%s wsc=%s", m["marginal_coverage"], m["mean_length"], m["wsc"])
    return EXIT_OK


def cmd_densify(args) -> int:
    cfg = _resolve_config(args)
    graph, table = load_bundle(args.data)
    stage = densify_stage(graph, table, cfg)
    doc = {
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "homophily": stage["eta"],
        "densify": stage["report"].to_dict(),
        "pca": stage["pca"].to_dict(),
    }
    _write_text(args.out, dump_report(doc))
    if args.edges_out:
        dense = stage["graph"]
        src, dst, w = dense.edge_list()
        added = [(a, b, x) for a, b, x in zip(src.tolist(), dst.tolist(), w.tolist()) if graph.weight(a, b) == 0.0]
        write_rows_csv(args.edges_out, [{"src": a, "dst": b, "weight": x} for a, b, x in added])
    return EXIT_OK


def outputs_from_records(records: list[dict]) -> list[PredictionOutput]:
    outs = []
    for r in records:
        q = float(r["quantile"])
        if "label_set" in r:
            outs.append(PredictionOutput(int(r["node_id"]), q, label_set=tuple(int(c) for c in r["label_set"])))
        else:
            lo, hi = (float(v) for v in r["interval"])
            outs.append(PredictionOutput(int(r["node_id"]), q, lo, hi))
    return outs


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    graph, table = load_bundle(args.data)
    report = read_report(args.report)
    if "nodes" not in report:
        raise GraphLCPError(f"{args.report}: not a run report (no 'nodes')")
    outs = outputs_from_records(report["nodes"])
    metrics = evaluate(graph, table, outs, cfg)
    _write_text(args.out, dump_report({"seed": cfg.seed, "config": cfg.to_dict(), "metrics": metrics}))
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SbmSpec(
        num_nodes=args.num_nodes,
        num_blocks=args.blocks,
        intra_prob=args.intra,
        inter_prob=args.inter,
        feature_dim=args.feature_dim,
        label_noise=args.label_noise,
        feature_noise=args.feature_noise,
        task=args.task,
        seed=args.seed,
    )
    graph, table = synthetic_bundle(spec, num_layers=args.layers, fractions=args.splits)
    save_bundle(args.out, graph, table)
    log.info("wrote %d-node bundle to %s", graph.num_nodes, args.out)
    return EXIT_OK


SWEEPABLE = [f.name for f in dataclasses.fields(RunConfig) if f.name not in ("method", "variant", "wsc_space", "score_kind", "split_fractions")]


def _parse_value(param: str, text: str):
    return int(text) if param in ("K", "T", "c", "num_directions", "seed") else float(text)


def cmd_sweep(args) -> int:
    base = _resolve_config(args)
    graph, table = load_bundle(args.data)
    rows = []
    for text in args.values.split(","):
        value = _parse_value(args.param, text.strip())
        data = base.to_dict()
        data[args.param] = value
        cfg = RunConfig.from_dict(data)
        report = run(graph, table, cfg, workers=args.parallel)
        m = report["metrics"] or {}
        d = report["densify"] or {}
        row = {
            "param": args.param,
            "value": value,
            "method": cfg.method,
            "seed": cfg.seed,
            "marginal_coverage": m.get("marginal_coverage"),
            "mean_length": m.get("mean_length"),
            "infinite_fraction": m.get("infinite_fraction"),
            "wsc": m.get("wsc"),
            "final_tau": d.get("final_tau"),
            "edge_ratio": d.get("edge_ratio"),
            "edges_added": d.get("edges_added"),
        }
        for name, v in (m.get("group_min_coverage") or {}).items():
            row[f"min_cov_{name}"] = v
        rows.append(row)
    rows = [{k: ("" if v is None else to_jsonable(v)) for k, v in r.items()} for r in rows]
    write_rows_csv(args.out, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    p = argparse.ArgumentParser(prog="graphlcp", description=__doc__, formatter_class=fmt)
    p.add_argument("--version", action="version", version=f"graphlcp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="output file ('-' for stdout)"):
        sp.add_argument("--data", required=True, help="bundle directory")
        sp.add_argument("--config", help="JSON run configuration (default: built-in defaults)")
        sp.add_argument("--out", default="-", help=f"{out_help} (default: -)")
        sp.add_argument("--method", choices=METHODS, help="override config method")
        sp.add_argument("--seed", type=int, help="override config seed")

    sp = sub.add_parser("run", help="end-to-end prediction and evaluation", epilog=_config_epilog(), formatter_class=fmt)
    common(sp, "report JSON")
    sp.add_argument("--parallel", type=_positive_int, default=1, help="worker threads for per-node prediction (default: 1)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("densify", help="densification only", epilog=_config_epilog(), formatter_class=fmt)
    common(sp, "densification JSON")
    sp.add_argument("--edges-out", help="CSV of added edges src,dst,weight")
    sp.set_defaults(func=cmd_densify)

    sp = sub.add_parser("eval", help="recompute metrics from a run report", epilog=_config_epilog(), formatter_class=fmt)
    common(sp, "metrics JSON")
    sp.add_argument("--report", required=True, help="run report JSON to evaluate")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("synth", help="write a synthetic SBM bundle", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sp.add_argument("--out", required=True, help="bundle directory to create")
    sp.add_argument("--num-nodes", type=_positive_int, default=800)
    sp.add_argument("--blocks", type=_positive_int, default=4)
    sp.add_argument("--intra", type=float, default=0.05, help="within-block edge probability")
    sp.add_argument("--inter", type=float, default=0.005, help="between-block edge probability")
    sp.add_argument("--feature-dim", type=_positive_int, default=16)
    sp.add_argument("--label-noise", type=float, default=0.0)
    sp.add_argument("--feature-noise", type=float, default=1.0)
    sp.add_argument("--task", choices=("classification", "regression"), default="classification")
    sp.add_argument("--layers", type=int, default=2, help="propagation layers of the surrogate encoder")
    sp.add_argument("--splits", type=_fractions, default=list(DEFAULT_FRACTIONS), help="train,valid,calib,test fractions")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("sweep", help="metrics over values of one parameter", epilog=_config_epilog(), formatter_class=fmt)
    common(sp, "metrics CSV")
    sp.add_argument("--param", required=True, choices=SWEEPABLE, help="config key to vary")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--parallel", type=_positive_int, default=1, help="worker threads per run (default: 1)")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    level = os.environ.get("GRAPHLCP_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GraphLCPError, FileNotFoundError, ValueError) as exc:
        print(f"graphlcp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
