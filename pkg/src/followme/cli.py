"""``followme`` command line: demo -> train -> eval -> report.

Workspace layout::

    demo.csv, demo.csv.meta.json      demonstration dataset
    models/<kind>_<inputs>.json       best model of each trained cell
    offline_report.csv / .json        per-cell mean train/test MSE
    eval/<label>__<scenario>.trace.csv, .metrics.json, box_stats.csv
    table1.csv, table2.csv, summary.txt

Exit codes: 0 success, 1 property/metric failure, 2 usage/IO/parse error.
"""
from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
from typing import Dict, List, Sequence

from . import __version__
from .config import FIELD_TYPES, ConfigError, RunConfig, build_config, coerce, parse_config_text
from .dataset import InputConfig, ParseError, ValidationError, dumps_csv, dumps_meta, read_csv
from .eval import (
    DEFAULT_GRID,
    BaselineController,
    MetricsReport,
    OfflineReport,
    box_csv,
    box_rows,
    closed_loop_run,
    compute_metrics,
    offline_eval,
)
from .expert import DemonstrationOutOfRange, record_demonstration
from .models.io import CorruptModel, dumps_model, load_model

logger = logging.getLogger("followme")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

DEMO_FILE = "demo.csv"
OFFLINE_JSON = "offline_report.json"
OFFLINE_CSV = "offline_report.csv"


class CommandError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        self.code = code
        super().__init__(message)


def _write_all(files: Dict[str, str]) -> None:
    """Write pre-rendered outputs; nothing is rendered after the first write."""
    try:
        for path, text in files.items():
            os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        raise CommandError(f"cannot write {exc.filename}: {exc.strerror}") from None


def _check_workspace_writable(cfg: RunConfig) -> None:
    ws = cfg.workspace
    target = ws if os.path.isdir(ws) else os.path.dirname(os.path.abspath(ws))
    if (os.path.exists(ws) and not os.path.isdir(ws)) or not os.access(target, os.W_OK):
        raise CommandError(f"workspace {ws!r} is not writable")


def _load_dataset(path: str):
    try:
        return read_csv(path)
    except FileNotFoundError:
        raise CommandError(f"dataset not found: {path}") from None
    except (ParseError, ValidationError) as exc:
        raise CommandError(f"{path}: {exc}") from None


# -- subcommands -------------------------------------------------------------------


def cmd_demo(cfg: RunConfig) -> int:
    _check_workspace_writable(cfg)
    try:
        ds = record_demonstration(
            cfg.demo_scenario(), cfg.gains(), cfg.anchors(), cfg.demo_noise(), cfg.rate_hz, cfg.duration
        )
    except DemonstrationOutOfRange as exc:
        raise CommandError(f"DemonstrationOutOfRange: {exc}", EXIT_FAILURE) from None
    path = os.path.join(cfg.workspace, DEMO_FILE)
    _write_all({path: dumps_csv(ds), path + ".meta.json": dumps_meta(ds)})
    print(f"wrote {len(ds)} samples at {ds.rate_hz:g} Hz to {path}")
    print(f"leader distance envelope: [{ds.meta['distance_min']:.3f}, {ds.meta['distance_max']:.3f}] m")
    return EXIT_OK


def _grid(cfg: RunConfig):
    kinds, inputs = set(cfg.kind_list), set(cfg.input_list)
    return [(k, i) for k, i in DEFAULT_GRID if k in kinds and i in inputs]


def cmd_train(cfg: RunConfig, dataset: str | None = None) -> int:
    _check_workspace_writable(cfg)
    ds = _load_dataset(dataset or os.path.join(cfg.workspace, DEMO_FILE))
    grid = _grid(cfg)
    if not grid:
        raise CommandError(f"no Table-1 cell matches kinds={cfg.kinds!r} inputs={cfg.inputs!r}")
    report = offline_eval(ds, grid, cfg.train_config(), cfg.train_fraction)
    files = {}
    for cell, model in report.best_models.items():
        files[os.path.join(cfg.workspace, "models", f"{cell}.json")] = dumps_model(model)
    files[os.path.join(cfg.workspace, OFFLINE_CSV)] = report.to_csv()
    files[os.path.join(cfg.workspace, OFFLINE_JSON)] = report.to_json()
    _write_all(files)
    for row in report.rows:
        flag = "  DIVERGED" if row.diverged else ""
        print(f"{row.kind:5s} {row.inputs:7s} train {row.train_mse:.5f} test {row.test_mse:.5f}{flag}")
    return EXIT_OK if report.best_models else EXIT_FAILURE


def _model_label(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def cmd_eval(cfg: RunConfig, model_paths: Sequence[str] = ()) -> int:
    _check_workspace_writable(cfg)
    if not model_paths:
        model_paths = sorted(glob.glob(os.path.join(cfg.workspace, "models", "*.json")))
        if not model_paths:
            raise CommandError(f"no model files under {os.path.join(cfg.workspace, 'models')}")
    models = []
    for path in model_paths:
        try:
            model = load_model(path)
        except FileNotFoundError:
            raise CommandError(f"model not found: {path}") from None
        except CorruptModel as exc:
            raise CommandError(f"{path}: {exc}") from None
        configured = {InputConfig.parse(i).feature_dim for i in cfg.input_list}
        if InputConfig.parse(model.inputs).feature_dim not in configured:
            raise CommandError(
                f"{path}: model consumes {InputConfig.parse(model.inputs).feature_dim} features "
                f"but configured inputs {cfg.inputs!r} provide {sorted(configured)}"
            )
        models.append((_model_label(path), model))
    if cfg.with_baseline:
        models.append(("baseline", BaselineController(cfg.nominal_d)))

    out_dir = os.path.join(cfg.workspace, "eval")
    files, boxes = {}, []
    for name in cfg.scenario_list:
        scenario = cfg.eval_scenario(name)
        # every model sees the same noise realization on a given scenario
        noise = cfg.noise(f"eval.{name}")
        for label, model in models:
            trace = closed_loop_run(model, getattr(model, "inputs", None), scenario, cfg.anchors(), noise, cfg.nominal_d, cfg.rate_hz)
            report = compute_metrics(trace, cfg.nominal_d)
            stem = os.path.join(out_dir, f"{label}__{name}")
            files[stem + ".trace.csv"] = trace.to_csv()
            files[stem + ".metrics.json"] = report.to_json()
            boxes.extend(box_rows(label, name, report))
            flag = "  COLLISION" if trace.collided else ""
            print(
                f"{label:12s} {name:7s} MAE angle {report.mae_angle_deg:6.2f} deg  mean dist "
                f"{report.mean_distance_m:.3f} m  MAE dist {report.mae_distance_m:.3f} m  "
                f"v std {report.speed_stats.std:.4f}{flag}"
            )
    files[os.path.join(out_dir, "box_stats.csv")] = box_csv(boxes)
    _write_all(files)
    return EXIT_OK


TABLE1_HEADER = "model,inputs,train_mse,test_mse,iterations,diverged\n"
TABLE2_HEADER = "model,inputs,scenario,mae_angle_deg,mean_distance_m,mae_distance_m,speed_std\n"


def cmd_report(cfg: RunConfig) -> int:
    ws = cfg.workspace
    offline_path = os.path.join(ws, OFFLINE_JSON)
    metric_paths = sorted(glob.glob(os.path.join(ws, "eval", "*.metrics.json")))
    missing = []
    if not os.path.exists(offline_path):
        missing.append(offline_path)
    if not metric_paths:
        missing.append(os.path.join(ws, "eval", "<model>__<scenario>.metrics.json"))
    if missing:
        raise CommandError("missing inputs: " + ", ".join(missing))
    try:
        with open(offline_path, encoding="utf-8") as fh:
            offline = OfflineReport.from_dict(json.load(fh))
        metrics = {}
        for path in metric_paths:
            label, scenario = os.path.basename(path)[: -len(".metrics.json")].split("__", 1)
            with open(path, encoding="utf-8") as fh:
                metrics[(label, scenario)] = MetricsReport.from_dict(json.load(fh))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CommandError(f"cannot read report inputs: {exc}") from None

    t1 = [TABLE1_HEADER]
    for r in offline.rows:
        t1.append(f"{r.kind},{r.inputs},{r.train_mse!r},{r.test_mse!r},{r.iterations},{int(r.diverged)}\n")
    t2 = [TABLE2_HEADER]
    lines = ["Offline study (mean over iterations, raw units)", ""]
    for r in offline.rows:
        lines.append(f"  {r.kind:5s} {r.inputs:7s} train MSE {r.train_mse:.5f}  test MSE {r.test_mse:.5f}")
    lines += ["", "Closed loop (distance MAE against nominal distance)", ""]
    for (label, scenario), m in sorted(metrics.items()):
        kind, _, inputs = label.partition("_")
        t2.append(
            f"{kind},{inputs},{scenario},{m.mae_angle_deg!r},{m.mean_distance_m!r},{m.mae_distance_m!r},{m.speed_stats.std!r}\n"
        )
        lines.append(
            f"  {label:12s} {scenario:7s} MAE {m.mae_angle_deg:6.2f} deg  mean {m.mean_distance_m:.3f} m  "
            f"MAE {m.mae_distance_m:.3f} m  v std {m.speed_stats.std:.4f}"
        )
    _write_all(
        {
            os.path.join(ws, "table1.csv"): "".join(t1),
            os.path.join(ws, "table2.csv"): "".join(t2),
            os.path.join(ws, "summary.txt"): "\n".join(lines) + "\n",
        }
    )
    print("\n".join(lines))
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    group = p.add_argument_group("config keys (override the config file)")
    for key in FIELD_TYPES:
        flags = [f"--{key}"]
        if "_" in key:
            flags.append(f"--{key.replace('_', '-')}")
        if FIELD_TYPES[key] == "bool":
            # --key / --no-key switches
            group.add_argument(*flags, dest=f"cfg_{key}", default=None, action=argparse.BooleanOptionalAction)
        else:
            group.add_argument(*flags, dest=f"cfg_{key}", default=None, metavar=FIELD_TYPES[key].upper())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="followme", description="UWB follow-me imitation learning pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo", help="record a scripted demonstration dataset")
    _add_config_flags(p)
    p = sub.add_parser("train", help="run the offline MSE study and save the best model per cell")
    p.add_argument("dataset", nargs="?", help="dataset CSV (default: <workspace>/demo.csv)")
    _add_config_flags(p)
    p = sub.add_parser("eval", help="closed-loop runs on the configured scenarios")
    p.add_argument("models", nargs="*", help="model files (default: every model in <workspace>/models)")
    _add_config_flags(p)
    p = sub.add_parser("report", help="merge offline and closed-loop results")
    _add_config_flags(p)
    return parser


def _resolve_config(args) -> RunConfig:
    file_values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_values = parse_config_text(fh.read())
        except OSError as exc:
            raise CommandError(f"cannot read config {args.config}: {exc.strerror}") from None
    overrides = {}
    for key in FIELD_TYPES:
        raw = getattr(args, f"cfg_{key}")
        if raw is not None:
            overrides[key] = coerce(key, raw)
    return build_config(file_values, overrides)


def main(argv: List[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        cfg = _resolve_config(args)
        if args.command == "demo":
            return cmd_demo(cfg)
        if args.command == "train":
            return cmd_train(cfg, args.dataset)
        if args.command == "eval":
            return cmd_eval(cfg, args.models)
        return cmd_report(cfg)
    except ConfigError as exc:
        print(f"followme: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CommandError as exc:
        print(f"followme {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
