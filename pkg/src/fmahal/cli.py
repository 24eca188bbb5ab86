"""Command-line interface.

::

    fmahal simulate --scenario 1 --n 200 --grid 50 --reps 100 --seed 7 --out runs/s1
    fmahal simulate --dataset tecator --data tecator.txt --reps 100 --out runs/tec
    fmahal tune     --train train.csv --methods knn:FM_C --out runs/tune
    fmahal classify --train train.csv --test test.csv --methods knn:L2 --k 1 --out runs/cls
    fmahal report   --results runs/s1/results.csv

Every option can also come from a JSON file given with ``--config``; flags
win over the file.  Each run writes ``manifest.json`` next to its outputs,
and ``fmahal --config manifest.json`` repeats the run.

Exit codes: 0 ok, 1 configuration error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .basis import build_bspline_basis
from .classifiers import TrainedClassifier, prepare, uses_truncation
from .datasets import PROTOCOLS, CurveTable, load_curves_csv, load_dataset, run_resampling, smooth_table
from .errors import (
    DataFormatError,
    DataParseError,
    FdaError,
    InvalidConfigurationError,
    InvalidSplitError,
)
from .fpca import LabeledSample
from .harness import STANDARD_METHODS, parse_method
from .report import read_summary_csv, render_table, write_replications_csv, write_summary_csv
from .simulate import ScenarioConfig, run_monte_carlo
from .tuning import LEAVE_ONE_OUT, TuningGrid, cross_validate

log = logging.getLogger("fmahal")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("simulate", "classify", "tune", "report")

DEFAULTS = {
    "seed": 0,
    "out": "fmahal-out",
    "max_components": 15,
    "max_neighbors": 9,
    "folds": 10,
    "jobs": 1,
    "scenario": 1,
    "n": 200,
    "grid": 50,
    "reps": 100,
    "dataset": None,
    "data": None,
    "layout": None,
    "methods": None,
    "train": None,
    "test": None,
    "truncation": None,
    "k": None,
    "order": 6,
    "num_basis": 20,
    "label_column": "label",
    "results": None,
    "quantity": "accuracy",
}


class ConfigError(Exception):
    pass


def _int_or_loo(s):
    return s if s == LEAVE_ONE_OUT else int(s)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file with option values (flags override it)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--methods", help="comma-separated method labels, e.g. knn:FM_C,flbcr")
    common.add_argument("--max-components", dest="max_components", type=int)
    common.add_argument("--max-neighbors", dest="max_neighbors", type=int)
    common.add_argument("--folds", type=_int_or_loo, help=f"CV folds or {LEAVE_ONE_OUT!r}")
    common.add_argument("--jobs", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    curves = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    curves.add_argument("--train", help="training curves (grid-header CSV)")
    curves.add_argument("--order", type=int, help="B-spline order")
    curves.add_argument("--num-basis", dest="num_basis", type=int)
    curves.add_argument("--label-column", dest="label_column")

    p = argparse.ArgumentParser(prog="fmahal", description="Functional Mahalanobis classification experiments")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", default=argparse.SUPPRESS, help="run the command stored in a config or manifest")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("simulate", parents=[common], argument_default=argparse.SUPPRESS,
                       help="Monte Carlo study or real-data resampling")
    s.add_argument("--scenario", type=int, choices=[1, 2, 3, 4])
    s.add_argument("--n", type=int, choices=[200, 300])
    s.add_argument("--grid", type=int, choices=[50, 100])
    s.add_argument("--reps", type=int)
    s.add_argument("--dataset", choices=sorted(PROTOCOLS))
    s.add_argument("--data", help="dataset file (default: look in $FMAHAL_DATA_DIR)")
    s.add_argument("--layout", choices=["grid-header", "tecator", "phoneme"])

    c = sub.add_parser("classify", parents=[common, curves], argument_default=argparse.SUPPRESS,
                       help="train on one file, label another")
    c.add_argument("--test", help="curves to classify (grid-header CSV)")
    c.add_argument("--truncation", type=int)
    c.add_argument("--k", type=int)

    sub.add_parser("tune", parents=[common, curves], argument_default=argparse.SUPPRESS,
                   help="cross-validation grid table")

    r = sub.add_parser("report", parents=[common], argument_default=argparse.SUPPRESS,
                       help="render results.csv as a mean (sd) table")
    r.add_argument("--results", help="results.csv written by simulate")
    r.add_argument("--quantity", choices=["accuracy", "truncation"])
    return p


def _line_of(text: str, key: str) -> int:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def load_config(path) -> dict:
    """Read a JSON config (or a run manifest) into a flat option dict."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: top level must be an object")
    if "config" in data and isinstance(data["config"], dict):  # a manifest
        data = data["config"]
    out = {}
    for key, val in data.items():
        name = key.replace("-", "_")
        if name != "command" and name not in DEFAULTS:
            raise ConfigError(f"{path}:{_line_of(text, key)}: unknown option {key!r}")
        if name == "command" and val not in COMMANDS:
            raise ConfigError(f"{path}:{_line_of(text, key)}: unknown command {val!r}")
        out[name] = val
    return out


def _config_path(argv):
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith("--config="):
            return a.split("=", 1)[1]
    return None


def resolve(argv=None) -> dict:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not any(a in COMMANDS for a in argv):
        # "fmahal --config run.json [flags]": take the command from the file
        path = _config_path(argv)
        if path is not None:
            command = load_config(path).get("command")
            if command:
                argv.insert(0, command)
    args = vars(build_parser().parse_args(argv))
    verbose = args.pop("verbose", False)
    cfg = {}
    if "config" in args:
        cfg = load_config(args.pop("config"))
    command = args.pop("command", None) or cfg.pop("command", None)
    cfg.pop("command", None)
    if command is None:
        raise ConfigError("no command given (simulate, classify, tune or report)")
    merged = dict(DEFAULTS)
    merged.update(cfg)
    merged.update(args)
    merged["command"] = command
    merged["verbose"] = verbose
    return merged


def _grid(cfg) -> TuningGrid:
    return TuningGrid(
        int(cfg["max_components"]), tuple(range(1, int(cfg["max_neighbors"]) + 1)), cfg["folds"]
    )


def _methods(cfg, default):
    m = cfg["methods"]
    if m is None:
        return tuple(default)
    labels = tuple(s.strip() for s in (m.split(",") if isinstance(m, str) else m) if s.strip())
    for lab in labels:
        parse_method(lab)
    return labels


class _Outputs:
    """Tracks files written by a run so a failed run leaves nothing behind."""

    def __init__(self, directory):
        self.dir = Path(directory)
        self.written: list[Path] = []

    def path(self, name) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / name
        self.written.append(p)
        return p

    def discard(self):
        for p in self.written:
            p.unlink(missing_ok=True)


def _snapshot(cfg) -> dict:
    keys = ["command", *DEFAULTS]
    return {k: cfg[k] for k in keys if k in cfg}


def _write_manifest(outs: _Outputs, cfg, extra=None):
    files = [p.name for p in outs.written]
    manifest = {"version": __version__, "config": _snapshot(cfg), "outputs": files}
    if extra:
        manifest.update(extra)
    with open(outs.path("manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _labeled(table: CurveTable, basis, n_classes=None) -> LabeledSample:
    if table.labels is None:
        raise DataFormatError(f"{table.source}: labels required")
    return LabeledSample(basis, smooth_table(table, basis), np.asarray(table.labels, dtype=int), n_classes)


def cmd_simulate(cfg, outs: _Outputs) -> int:
    grid = _grid(cfg)
    if cfg["dataset"]:
        protocol = PROTOCOLS[cfg["dataset"]]
        if cfg["data"]:
            layout = cfg["layout"] or ("phoneme" if protocol.name == "phoneme" else "tecator")
            table = load_curves_csv(cfg["data"], layout)
        else:
            table = load_dataset("phoneme" if protocol.name == "phoneme" else "tecator")
        result = run_resampling(table, protocol, _methods(cfg, STANDARD_METHODS), int(cfg["reps"]), int(cfg["seed"]), grid)
        title = f"{protocol.name}: proportion of correct classification over {cfg['reps']} resamples"
    else:
        scen = ScenarioConfig.standard(int(cfg["scenario"]), int(cfg["n"]), int(cfg["grid"]))
        result = run_monte_carlo(scen, _methods(cfg, STANDARD_METHODS), int(cfg["reps"]), int(cfg["seed"]), grid, int(cfg["jobs"]))
        title = f"Scenario {cfg['scenario']}, n={cfg['n']}, J={cfg['grid']}: proportion of correct classification"
    write_summary_csv(result, outs.path("results.csv"))
    write_replications_csv(result, outs.path("replications.csv"))
    rows = result.summary()
    text = render_table(rows, "accuracy", title) + "\n" + render_table(rows, "truncation", "Chosen number of components")
    if result.failures:
        text += f"\n{len(result.failures)} replication(s) failed after retries\n"
    outs.path("table.txt").write_text(text)
    _write_manifest(outs, cfg, {"failed_replications": len(result.failures)})
    print(text, end="")
    return EXIT_NUMERIC if result.failures else EXIT_OK


def cmd_classify(cfg, outs: _Outputs) -> int:
    if not cfg["train"] or not cfg["test"]:
        raise ConfigError("classify needs --train and --test")
    labels = _methods(cfg, ["knn:L2"])
    if len(labels) != 1:
        raise ConfigError("classify takes exactly one method")
    label = labels[0]
    method, kind = parse_method(label)
    basis = build_bspline_basis((0.0, 1.0), int(cfg["order"]), int(cfg["num_basis"]))
    tr_table = load_curves_csv(cfg["train"], label_column=cfg["label_column"])
    te_table = load_curves_csv(cfg["test"], label_column=cfg["label_column"])
    if tr_table.grid.shape != te_table.grid.shape or np.any(tr_table.grid != te_table.grid):
        raise DataFormatError("train and test files must share one grid")
    train = _labeled(tr_table, basis)
    K, k = cfg["truncation"], cfg["k"]
    needs_K = uses_truncation(method, kind)
    if (needs_K and K is None) or (method == "knn" and k is None):
        cv = cross_validate(train, method, kind, _grid(cfg), seed=int(cfg["seed"]))
        K = K if K is not None else cv.truncation
        k = k if k is not None else cv.k_neighbors
    clf = TrainedClassifier(prepare(train, method, kind), K if needs_K else None, k if method == "knn" else None)
    pred = clf.predict(smooth_table(te_table, basis))
    with open(outs.path("predictions.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "true_label", "predicted_label"])
        for i, p in enumerate(pred):
            truth = "" if te_table.labels is None else int(te_table.labels[i])
            w.writerow([i, truth, int(p)])
    _write_manifest(outs, cfg, {"truncation": K if needs_K else None, "k_neighbors": k if method == "knn" else None})
    if te_table.labels is not None:
        print(f"{label}: accuracy {np.mean(pred == te_table.labels):.4f} on {len(pred)} curves")
    return EXIT_OK


def cmd_tune(cfg, outs: _Outputs) -> int:
    if not cfg["train"]:
        raise ConfigError("tune needs --train")
    basis = build_bspline_basis((0.0, 1.0), int(cfg["order"]), int(cfg["num_basis"]))
    train = _labeled(load_curves_csv(cfg["train"], label_column=cfg["label_column"]), basis)
    grid = _grid(cfg)
    with open(outs.path("cv_table.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "truncation", "k_neighbors", "cv_accuracy", "chosen"])
        for label in _methods(cfg, ["knn:FM_C"]):
            method, kind = parse_method(label)
            cv = cross_validate(train, method, kind, grid, seed=int(cfg["seed"]))
            for K, k, acc in cv.table:
                chosen = int(K == cv.truncation and k == cv.k_neighbors)
                w.writerow([label, "" if K is None else K, "" if k is None else k, repr(acc), chosen])
            print(f"{label}: truncation={cv.truncation} k={cv.k_neighbors} cv_accuracy={cv.cv_accuracy:.4f}")
    _write_manifest(outs, cfg)
    return EXIT_OK


def cmd_report(cfg, outs: _Outputs) -> int:
    if not cfg["results"]:
        raise ConfigError("report needs --results")
    try:
        rows = read_summary_csv(cfg["results"])
    except (OSError, KeyError, ValueError) as exc:
        raise DataFormatError(f"{cfg['results']}: {exc}") from None
    text = render_table(rows, cfg["quantity"])
    print(text, end="")
    if "out" in cfg and cfg["out"] != DEFAULTS["out"]:
        outs.path("table.txt").write_text(text)
    return EXIT_OK


HANDLERS = {"simulate": cmd_simulate, "classify": cmd_classify, "tune": cmd_tune, "report": cmd_report}


def dispatch(cfg: dict) -> int:
    """Run one command from a resolved option dict; returns the exit status."""
    outs = _Outputs(cfg["out"])
    try:
        return HANDLERS[cfg["command"]](cfg, outs)
    except (ConfigError, InvalidConfigurationError) as exc:
        outs.discard()
        print(f"fmahal: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, DataParseError, InvalidSplitError, FileNotFoundError) as exc:
        outs.discard()
        print(f"fmahal: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FdaError, np.linalg.LinAlgError) as exc:
        outs.discard()
        print(f"fmahal: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BaseException:
        outs.discard()
        raise


def main(argv=None) -> int:
    try:
        cfg = resolve(argv)
    except ConfigError as exc:
        print(f"fmahal: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if cfg.pop("verbose") else logging.WARNING)
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
