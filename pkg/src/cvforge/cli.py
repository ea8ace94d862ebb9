"""Command-line front end: ``cvforge run | compare | inspect | preprocess``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 data error,
4 cross-validation or runtime error, 5 fold-plan mismatch, 6 requested
artifacts not retained or out of range.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import jsonschema

from . import model as models
from . import transform
from .cv import CVScheme, TuningConfig, run_cross_validation, tune_grid
from .errors import ConfigError, CVForgeError, DataError, FoldPlanMismatch, NotRetained
from .inspection import InspectionView, fold_predictions, fitted_params
from .numerics import RngStream
from .pipeline import PipelineSpec, preprocess_until
from .report import long_scores_table, plot_fold_scores, plot_predictions, write_run_outputs
from .results import load_result, save_result
from .score import METRICS
from .stats import compare_all
from .table import FeatureTypeMap, read_csv, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME, EXIT_MISMATCH, EXIT_ARTIFACT = 0, 2, 3, 4, 5, 6

SEED_ENV = "CVFORGE_SEED"

_SELECTOR = {
    "oneOf": [
        {"type": "string"},
        {"type": "array", "items": {"type": "string"}},
        {"type": "object", "properties": {"types": {"type": "array", "items": {"type": "string"}}}, "required": ["types"], "additionalProperties": False},
        {"type": "object", "properties": {"columns": {"type": "array", "items": {"type": "string"}}}, "required": ["columns"], "additionalProperties": False},
    ]
}

_SCHEME = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["kfold", "repeated_kfold", "stratified_kfold", "group_kfold", "leave_one_out"]},
        "k": {"type": "integer", "minimum": 2},
        "repeats": {"type": "integer", "minimum": 1},
        "shuffle": {"type": "boolean"},
        "group": {"type": "string"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "data": {"type": "string"},
        "features": {
            "oneOf": [
                {"type": "array", "items": {"type": "string"}, "minItems": 1},
                {"type": "object", "properties": {"all_but": {"type": "array", "items": {"type": "string"}}}, "required": ["all_but"], "additionalProperties": False},
            ]
        },
        "target": {"type": "string"},
        "x_types": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "string"}}},
        "pipeline": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "kind": {"enum": sorted(transform.PARAMS) + sorted(models.PARAMS)},
                    "name": {"type": "string", "minLength": 1},
                    "params": {"type": "object"},
                    "apply_to": _SELECTOR,
                    "grid": {"type": "object", "additionalProperties": {"type": "array"}},
                },
                "required": ["kind"],
                "additionalProperties": False,
            },
        },
        "problem_type": {"enum": list(models.PROBLEM_TYPES)},
        "cv": {
            "type": "object",
            "properties": {
                **_SCHEME["properties"],
                "inner": _SCHEME,
                "objective": {"enum": sorted(METRICS)},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "scoring": {"type": "array", "items": {"enum": sorted(METRICS)}, "minItems": 1},
        "seed": {"type": "integer", "minimum": 0},
        "retain": {"type": "boolean"},
        "out": {"type": "string"},
    },
    "required": ["data", "features", "target", "pipeline", "problem_type"],
    "additionalProperties": False,
}


class RunSetup:
    """Everything a config resolves to, ready for execution."""

    def __init__(self, config: dict, base: Path, data_override=None, seed_override=None):
        self.config = config
        data_path = Path(data_override) if data_override else base / config["data"]
        self.data = read_csv(data_path)
        self.target = config["target"]
        self.problem_type = config["problem_type"]
        self.types = FeatureTypeMap(config.get("x_types", {}))
        cv = dict(config.get("cv", {"kind": "kfold"}))
        inner = cv.pop("inner", None)
        objective = cv.pop("objective", None)
        self.scheme = CVScheme(**cv)
        self.tuning = TuningConfig(CVScheme(**inner) if inner else None, objective)
        features = config["features"]
        if isinstance(features, dict):
            skip = set(features["all_but"]) | {self.target}
            if self.scheme.group:
                skip.add(self.scheme.group)
            features = [c for c in self.data.column_names if c not in skip]
        self.features = list(features)
        spec = PipelineSpec(self.problem_type)
        for step in config["pipeline"]:
            spec = spec.add(
                step["kind"],
                name=step.get("name"),
                apply_to=step.get("apply_to", "continuous"),
                grid=step.get("grid"),
                **step.get("params", {}),
            )
        self.spec = spec
        self.scoring = config.get("scoring")
        self.retain = config.get("retain", False)
        self.seed = resolve_seed(seed_override, config.get("seed"))


def resolve_seed(flag, config_seed) -> int:
    """``--seed`` beats the config, which beats the environment; default 0."""
    if flag is not None:
        return flag
    if config_seed is not None:
        return config_seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be a non-negative integer, got {env!r}") from None
        if seed < 0:
            raise ConfigError(f"{SEED_ENV} must be a non-negative integer, got {env!r}")
        return seed
    return 0


def load_config(path) -> tuple[dict, Path]:
    path = Path(path)
    try:
        config = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    error = jsonschema.exceptions.best_match(validator.iter_errors(config))
    if error is not None:
        where = "/".join(str(p) for p in error.absolute_path) or "<top level>"
        raise ConfigError(f"invalid config at {where}: {error.message}")
    return config, path.parent


def _print_summary(result, name):
    print(f"pipeline: {name}  ({len(result.folds)} folds, seed {result.seed})")
    width = max(len(m) for m in result.metrics)
    for m in result.metrics:
        print(f"  {m.ljust(width)}  {result.mean(m): .4f} +/- {result.std(m):.4f}")


def cmd_run(args) -> int:
    config, base = load_config(args.config)
    setup = RunSetup(config, base, args.data, args.seed)
    echo = {k: v for k, v in config.items() if k != "out"}
    if args.data:
        echo["data"] = args.data
    echo["seed"] = setup.seed
    result = run_cross_validation(
        setup.data, setup.features, setup.target, setup.types, setup.spec, setup.scheme,
        setup.scoring, setup.tuning, setup.seed, setup.retain, args.jobs,
    )
    result = dataclasses.replace(result, config_echo=echo)
    out = Path(args.out or config.get("out") or "result.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_result(result, out)
    extra = write_run_outputs(result, out)
    _print_summary(result, out.stem)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {out}, {extra['scores_csv']}, {extra['scores_png']}")
    return EXIT_OK


def _unique_names(paths):
    names = []
    for p in paths:
        name = Path(p).stem
        base, i = name, 1
        while name in names:
            i += 1
            name = f"{base}_{i}"
        names.append(name)
    return names


def cmd_compare(args) -> int:
    if len(args.results) < 2:
        raise ConfigError("compare needs at least two result files")
    results = [load_result(p) for p in args.results]
    metric = args.metric or results[0].metrics[0]
    named = list(zip(_unique_names(args.results), results))
    try:
        comparison = compare_all(named, metric)
    except DataError as exc:
        if "absent" in str(exc):
            raise ConfigError(str(exc)) from None
        raise
    out = Path(args.out or "comparison.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    doc = {"metric": metric, "models": [n for n, _ in named], "pairs": comparison.rows}
    out.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    text = comparison.render()
    out.with_suffix(".txt").write_text(text, encoding="utf-8")
    write_csv(long_scores_table(comparison.scores), out.with_suffix(".scores.csv"))
    plot_fold_scores([(n, r.fold_scores(metric)) for n, r in named], metric, out.with_suffix(".png"), comparison.rows)
    sys.stdout.write(text)
    return EXIT_OK


def _parse_fold(text):
    try:
        repeat, fold = (int(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"--fold expects REPEAT:FOLD, got {text!r}") from None
    return repeat, fold


def cmd_inspect(args) -> int:
    result = load_result(args.result)
    view = InspectionView(result)
    if args.fold is not None:
        view = view.at(*_parse_fold(args.fold))
    if args.what == "predictions":
        out = Path(args.out or "predictions.csv")
        out.parent.mkdir(parents=True, exist_ok=True)
        table = fold_predictions(view)
        write_csv(table, out)
        plot_predictions(table["y_true"], table["y_pred"], result.problem_type, out.with_suffix(".png"))
        print(f"wrote {table.n_rows} predictions to {out}")
        return EXIT_OK
    out = Path(args.out or "params.json")
    if view.repeat is not None:
        doc = {"repeat": view.repeat, "fold": view.fold, "steps": fitted_params(view, view.repeat, view.fold)}
    else:
        doc = [{"repeat": f.repeat, "fold": f.fold, "steps": fitted_params(view, f.repeat, f.fold)} for f in result.folds]
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    print(f"wrote fitted parameters to {out}")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    config, base = load_config(args.config)
    setup = RunSetup(config, base)
    step = args.until
    if step == setup.spec.model_step.name or step in models.PARAMS:
        raise ConfigError("model step not preprocessable")
    setup.spec.step(step)
    print(
        "note: preprocess fits on the FULL dataset; output is for inspection only and is not cross-validated",
        file=sys.stderr,
    )
    tuned = tune_grid(
        setup.spec, setup.data, setup.features, setup.target, setup.types,
        setup.tuning.inner, setup.tuning.objective or (setup.scoring or [None])[0], RngStream(setup.seed),
    )
    table = preprocess_until(tuned.pipeline, setup.data, step)
    table = table.with_columns({setup.target: setup.data[setup.target]}) if setup.target not in table else table
    out = Path(args.out or f"preprocessed_{step}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(table, out)
    names = [n for n, _ in tuned.pipeline.steps]
    types = tuned.pipeline.types_after[names.index(step)]
    meta = {
        "until": step,
        "fitted_on": "full dataset",
        "cross_validated": False,
        "chosen_params": tuned.pipeline.chosen_params(),
        "types": types.as_dict(),
    }
    out.with_suffix(".meta.json").write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {table.n_rows} rows x {len(table.column_names)} columns to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvforge", description="Leakage-free cross-validated model evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="cross-validate the pipeline described by a config")
    run.add_argument("--config", required=True, help="JSON run configuration")
    run.add_argument("--data", help="override the config's data path")
    run.add_argument("--seed", type=int, help=f"override the config seed (lowest priority: ${SEED_ENV})")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for fold evaluation")
    run.add_argument("--out", help="result JSON path")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="corrected t-tests between results sharing a fold plan")
    cmp_.add_argument("results", nargs="+", help="result JSON files")
    cmp_.add_argument("--metric", help="metric to compare (default: first metric of the first result)")
    cmp_.add_argument("--out", help="comparison JSON path")
    cmp_.set_defaults(func=cmd_compare)

    insp = sub.add_parser("inspect", help="export fold predictions or fitted parameters")
    insp.add_argument("result", help="result JSON file")
    insp.add_argument("--fold", help="REPEAT:FOLD to restrict to one fold")
    insp.add_argument("--what", choices=["predictions", "params"], default="predictions")
    insp.add_argument("--out", help="output path")
    insp.set_defaults(func=cmd_inspect)

    pre = sub.add_parser("preprocess", help="transform the full dataset up to a step (not cross-validated)")
    pre.add_argument("--config", required=True, help="JSON run configuration")
    pre.add_argument("--until", required=True, help="name of the last step to apply")
    pre.add_argument("--out", help="output CSV path")
    pre.set_defaults(func=cmd_preprocess)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        code, msg = EXIT_CONFIG, str(exc)
    except DataError as exc:
        code, msg = EXIT_DATA, str(exc)
    except FoldPlanMismatch as exc:
        code, msg = EXIT_MISMATCH, str(exc)
    except NotRetained as exc:
        code, msg = EXIT_ARTIFACT, str(exc)
    except (CVForgeError, ArithmeticError) as exc:
        code, msg = EXIT_RUNTIME, str(exc)
    print(f"error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
