"""Command line entry point.

Commands:
  gen              generate statement pools from schemas + data sources
  mix              sample a balanced multitask training mixture
  train            train the statement scorer on the mixture
  predict          label a dataset split with a trained model
  eval             run the T x E evaluation matrix
  sweep            eval once per point along a mixture axis
  validate-schema  check schema files and report violations

All commands read one JSON run config (--config; a manifest file works too)
with optional --seed and --out overrides. Outputs land in digest-keyed
immutable directories with a manifest. Errors exit nonzero and print one
machine-readable JSON line to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path
from random import Random

from . import evalharness as eh
from . import infer
from .artifacts import publish
from .errors import ConfigError, SchemaFormatError, StatementKitError
from .runconfig import RunConfig, build_training_tasks, load_run_config, resolve_schemas
from .sampler import build_training_mixture
from .schema import load_bundled_schema, load_schema, validate_schema
from .seeding import derive_seed
from .statgen import dumps_statements
from .runconfig import load_split


def _backend(config: RunConfig):
    if config.backend_kind == "native":
        return eh.NativeBackend()
    from .xclient import ExternalBackend
    return ExternalBackend(config.endpoint())


def _json_bytes(doc) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def _report_files(report: dict, stem: str) -> dict[str, bytes]:
    rows = eh.report_rows(report)
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return {
        f"{stem}.json": _json_bytes(report),
        f"{stem}.csv": buf.getvalue().encode("utf-8"),
        f"{stem}.txt": (eh.render_table(report) + "\n").encode("utf-8"),
    }


def _reject_files(rejects: dict[str, list]) -> dict[str, bytes]:
    return {f"{ds}.rejects.json": _json_bytes(rows) for ds, rows in rejects.items()}


# --- commands ---

def cmd_gen(config: RunConfig) -> Path:
    schemas = resolve_schemas(config)
    tasks, rejects = build_training_tasks(config, schemas)
    if not tasks:
        raise ConfigError(["no dataset has a train split to generate from"])
    outputs = {f"{ds}.statements.jsonl": dumps_statements(task.pool).encode("utf-8")
               for ds, task in tasks.items()}
    outputs |= _reject_files(rejects)
    return publish(config.out, "gen", config.resolved, config.seed, outputs,
                   notes={"datasets": sorted(tasks)})


def cmd_mix(config: RunConfig) -> Path:
    schemas = resolve_schemas(config)
    tasks, rejects = build_training_tasks(config, schemas)
    mix_cfg = replace(config.mixture, seed=derive_seed(config.seed, "mix"))
    mixture = build_training_mixture(mix_cfg, tasks)
    outputs = {"mixture.jsonl": dumps_statements(mixture).encode("utf-8")}
    outputs |= _reject_files(rejects)
    return publish(config.out, "mix", config.resolved, config.seed, outputs,
                   notes={"size": len(mixture)})


def cmd_train(config: RunConfig) -> Path:
    schemas = resolve_schemas(config)
    tasks, rejects = build_training_tasks(config, schemas)
    mix_cfg = replace(config.mixture, seed=derive_seed(config.seed, "mix"))
    mixture = build_training_mixture(mix_cfg, tasks)
    backend = _backend(config)
    scorer_cfg = replace(config.scorer, seed=derive_seed(config.seed, "scorer"))
    model = backend.train(scorer_cfg, mixture)
    outputs = {"model.stmk": backend.model_bytes(model)}
    outputs |= _reject_files(rejects)
    return publish(config.out, "train", config.resolved, config.seed, outputs,
                   notes={"backend": backend.name, "mixture_size": len(mixture)})


def cmd_predict(config: RunConfig, model_path: str, dataset: str) -> Path:
    schemas = resolve_schemas(config)
    if dataset not in schemas:
        raise ConfigError([f"dataset {dataset!r} has no loaded schema"])
    schema = schemas[dataset]
    examples, rejects = load_split(config, schema, "eval")
    if examples is None:
        examples, rejects = load_split(config, schema, "train")
    if not examples:
        raise ConfigError([f"dataset {dataset!r} has no eval or train split to predict on"])

    backend = _backend(config)
    model = backend.load_model(model_path)
    family = infer.pick_eval_family(schema, Random(derive_seed(config.seed, "predict", dataset)))
    predictions = infer.predict(model, schema, family, examples)
    lines = [json.dumps({
        "example_id": p.example_id, "predicted": p.predicted, "gold": p.gold,
        "correct": p.correct, "scores": [round(s, 6) for s in p.scores],
    }, sort_keys=True, ensure_ascii=False) for p in predictions]
    summary = {
        "dataset": dataset, "family": family, "n": len(predictions),
        "accuracy": infer.accuracy(predictions),
    }
    outputs = {"predictions.jsonl": ("\n".join(lines) + "\n").encode("utf-8"),
               "summary.json": _json_bytes(summary)}
    if rejects:
        outputs |= _reject_files({dataset: rejects})
    resolved = config.resolved | {"predict": {"dataset": dataset, "model": str(model_path)}}
    target = publish(config.out, "predict", resolved, config.seed, outputs, notes=summary)
    print(json.dumps(summary, sort_keys=True))
    return target


def _matrix_setup(config: RunConfig):
    if config.matrix is None:
        raise ConfigError(["config has no matrix section; eval/sweep need one"])
    schemas = resolve_schemas(config)
    tasks, rejects = build_training_tasks(config, schemas)
    eval_tasks = {}
    problems = []
    for ds in config.matrix["eval_datasets"]:
        schema = schemas[ds]
        eval_examples, eval_rejects = load_split(config, schema, "eval")
        if eval_rejects:
            rejects[f"{ds}.eval"] = eval_rejects
        if eval_examples is None:
            problems.append(f"dataset {ds} has no eval split")
            continue
        train_examples, _ = load_split(config, schema, "train")
        eval_tasks[ds] = eh.EvalTask(schema, tuple(eval_examples),
                                     tuple(train_examples) if train_examples else None)
    if problems:
        raise ConfigError(problems)
    m = config.matrix
    run_cfg = eh.RunMatrixConfig(
        train_runs=m.get("train_runs", 5),
        eval_runs=m.get("eval_runs", 5),
        mixture=config.mixture,
        nshot=tuple(m.get("nshot", [0])),
        eval_datasets=tuple(m["eval_datasets"]),
        mean_kind=m.get("mean_kind", "arithmetic"),
        seed=config.seed,
    )
    return run_cfg, tasks, eval_tasks, rejects


def cmd_eval(config: RunConfig) -> Path:
    run_cfg, tasks, eval_tasks, rejects = _matrix_setup(config)
    backend = _backend(config)
    report = eh.run_matrix(run_cfg, tasks, eval_tasks, config.scorer, backend)
    outputs = _report_files(report, "report") | _reject_files(rejects)
    return publish(config.out, "eval", config.resolved, config.seed, outputs,
                   notes={"cells": len(report["cells"]), "failures": len(report["failures"])})


def _parse_points(axis: str, text: str) -> list:
    points = [p.strip() for p in text.split(",") if p.strip()]
    if axis in ("sample_size", "spc"):
        try:
            return [int(p) for p in points]
        except ValueError:
            raise ConfigError([f"--points for {axis} must be integers, got {text!r}"]) from None
    if axis == "categories":
        return [tuple(part.strip() for part in p.split("+") if part.strip()) for p in points]
    raise ConfigError([f"unknown sweep axis {axis!r}; expected one of {eh.SWEEP_AXES}"])


def cmd_sweep(config: RunConfig, axis: str, points_text: str) -> Path:
    run_cfg, tasks, eval_tasks, rejects = _matrix_setup(config)
    points = _parse_points(axis, points_text)
    backend = _backend(config)
    report = eh.sweep(run_cfg, axis, points, tasks, eval_tasks, config.scorer, backend)
    outputs = _report_files(report, "sweep") | _reject_files(rejects)
    resolved = config.resolved | {"sweep": {"axis": axis, "points": points_text}}
    return publish(config.out, "sweep", resolved, config.seed, outputs,
                   notes={"axis": axis, "points": len(points)})


def cmd_validate_schema(specs: list[str]) -> int:
    bad = 0
    for spec in specs:
        try:
            if spec.startswith("bundled:"):
                load_bundled_schema(spec.split(":", 1)[1])
            else:
                load_schema(spec)
            print(f"{spec}: ok")
        except SchemaFormatError as exc:
            bad += 1
            print(f"{spec}: INVALID")
            for v in exc.violations or [str(exc)]:
                print(f"  - {v}")
        except FileNotFoundError as exc:
            bad += 1
            print(f"{spec}: INVALID\n  - {exc}")
    return 1 if bad else 0


# --- argument wiring ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="statementkit",
                                     description="statement tuning toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run config or manifest JSON")
        p.add_argument("--seed", type=int, default=None, help="override the base seed")
        p.add_argument("--out", default=None, help="override the output directory")

    common(sub.add_parser("gen", help="generate statement pools"))
    common(sub.add_parser("mix", help="sample the balanced training mixture"))
    common(sub.add_parser("train", help="train the statement scorer"))

    p = sub.add_parser("predict", help="label one dataset with a trained model")
    common(p)
    p.add_argument("--model", required=True, help="path to a trained model file")
    p.add_argument("--dataset", required=True, help="dataset id to predict on")

    common(sub.add_parser("eval", help="run the T x E evaluation matrix"))

    p = sub.add_parser("sweep", help="evaluate along a mixture axis")
    common(p)
    p.add_argument("--axis", required=True, choices=eh.SWEEP_AXES)
    p.add_argument("--points", required=True,
                   help="comma-separated points; category sets joined with +")

    p = sub.add_parser("validate-schema", help="check schema files")
    p.add_argument("specs", nargs="+", help="schema paths or bundled:<name>")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate-schema":
            return cmd_validate_schema(args.specs)
        config = load_run_config(args.config, seed_override=args.seed, out_override=args.out)
        if args.command == "gen":
            target = cmd_gen(config)
        elif args.command == "mix":
            target = cmd_mix(config)
        elif args.command == "train":
            target = cmd_train(config)
        elif args.command == "predict":
            target = cmd_predict(config, args.model, args.dataset)
        elif args.command == "eval":
            target = cmd_eval(config)
        elif args.command == "sweep":
            target = cmd_sweep(config, args.axis, args.points)
        else:  # pragma: no cover - argparse enforces the choices
            raise StatementKitError(f"unknown command {args.command}")
        print(target)
        return 0
    except StatementKitError as exc:
        doc = {"error": type(exc).__name__, "message": str(exc)}
        violations = getattr(exc, "violations", None)
        if violations:
            doc["violations"] = list(violations)
        print(json.dumps(doc, sort_keys=True), file=sys.stderr)
        return 2 if isinstance(exc, (ConfigError, SchemaFormatError)) else 1


if __name__ == "__main__":
    sys.exit(main())
