"""Multi-run evaluation harness.

A run matrix trains the scorer T times (fresh mixture sample and SGD seed per
training run) and evaluates each trained model E times per dataset, so every
(dataset, K) cell holds exactly T*E accuracies. The evaluation template
family is re-picked per evaluation run. K-shot cells continue training a
copy of the run's model on statements expanded from K drawn examples.

Every random decision uses a seed derived from (base seed, role, t, e, ...),
so any single cell can be recomputed in isolation and reruns are identical.
Reports carry raw per-cell values plus aggregates and never contain wall
clock data.

Shot drawing rules:
  - shots come from the task's train split when one exists, otherwise from
    the evaluation split, leaving the remainder to be scored;
  - K is capped at what the pool can supply (the full-data ladder point is
    expressed as K=3000 plus this cap);
  - tasks with more than two candidates skip K > 200 cells.
"""

from __future__ import annotations

import hashlib
import json
import logging
import statistics
from dataclasses import dataclass, field, replace
from random import Random
from typing import Mapping, Sequence

from .errors import ConfigError, GeometricNonPositive, StatementKitError
from .infer import (
    accuracy,
    candidate_count,
    evaluable_families,
    fewshot_expand,
    pick_eval_family,
    predict,
)
from .sampler import MixtureConfig, TrainingTask, build_training_mixture
from .schema import TASK_CATEGORIES, Example, TaskSchema
from .seeding import derive_seed
from . import scorer as _scorer

log = logging.getLogger(__name__)

NSHOT_LADDER = (0, 32, 200, 500, 1000, 3000)
SAMPLE_SIZE_POINTS = (1000, 2000, 3000, 4000, 5000, 10000, 20000, 40000, 50000)
SPC_POINTS = (1, 2, 3, 4, 5)
MULTICLASS_SHOT_CAP = 200
SWEEP_AXES = ("sample_size", "spc", "categories")


def category_ladder() -> tuple[tuple[str, ...], ...]:
    """Cumulative category prefixes, widest first, down to the first three."""
    return tuple(TASK_CATEGORIES[:k] for k in range(len(TASK_CATEGORIES), 2, -1))


@dataclass(frozen=True)
class EvalTask:
    schema: TaskSchema
    eval_examples: tuple[Example, ...]
    train_examples: tuple[Example, ...] | None = None


@dataclass(frozen=True)
class RunMatrixConfig:
    train_runs: int = 5
    eval_runs: int = 5
    mixture: MixtureConfig = field(default_factory=MixtureConfig)
    nshot: tuple[int, ...] = (0,)
    eval_datasets: tuple[str, ...] = ()
    mean_kind: str = "arithmetic"
    seed: int = 0

    def __post_init__(self):
        problems = []
        if self.train_runs < 1:
            problems.append("train_runs must be at least 1")
        if self.eval_runs < 1:
            problems.append("eval_runs must be at least 1")
        if any(k < 0 for k in self.nshot):
            problems.append("nshot values must be nonnegative")
        if not self.eval_datasets:
            problems.append("eval_datasets must not be empty")
        if self.mean_kind not in ("arithmetic", "geometric"):
            problems.append(f"mean_kind {self.mean_kind!r} is not arithmetic or geometric")
        if problems:
            raise ConfigError(problems)


class NativeBackend:
    """In-process hashed n-gram scorer."""

    name = "native"

    def train(self, scorer_config: _scorer.ScorerConfig, data):
        return _scorer.train(scorer_config, data)

    def continue_train(self, model, data, epochs: int, seed: int):
        return _scorer.continue_train(model, data, epochs, seed=seed)

    def model_bytes(self, model) -> bytes:
        return _scorer.dumps_model(model)

    def load_model(self, path):
        return _scorer.load_model(path)


def aggregate(values: Sequence[float], mean_kind: str) -> tuple[float, float]:
    """(mean, sample std). The std always describes the raw values."""
    if not values:
        raise StatementKitError("cannot aggregate an empty value list")
    if mean_kind not in ("arithmetic", "geometric"):
        raise StatementKitError(f"unknown mean kind {mean_kind!r}")
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    if min(values) == max(values):
        return float(values[0]), std
    if mean_kind == "arithmetic":
        return statistics.fmean(values), std
    if min(values) <= 0.0:
        raise GeometricNonPositive("geometric mean requires strictly positive values")
    return statistics.geometric_mean(values), std


def config_digest(config: RunMatrixConfig) -> str:
    payload = {
        "train_runs": config.train_runs,
        "eval_runs": config.eval_runs,
        "mixture": {
            "per_dataset_n": config.mixture.per_dataset_n,
            "spc": config.mixture.spc,
            "selected_categories": config.mixture.selected_categories,
            "total_budget": config.mixture.total_budget,
            "seed": config.mixture.seed,
        },
        "nshot": list(config.nshot),
        "eval_datasets": list(config.eval_datasets),
        "mean_kind": config.mean_kind,
        "seed": config.seed,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def evaluate(model, schema: TaskSchema, eval_examples: Sequence[Example], eval_seed: int) -> float:
    """Accuracy with one template family picked from the eval seed."""
    if not eval_examples:
        raise StatementKitError(f"{schema.dataset_id}: evaluation set is empty")
    family = pick_eval_family(schema, Random(eval_seed))
    return accuracy(predict(model, schema, family, eval_examples))


def _is_multiclass(schema: TaskSchema) -> bool:
    counts = [candidate_count(schema, f) for f in evaluable_families(schema)]
    return bool(counts) and max(counts) > 2


def _train_run_model(config: RunMatrixConfig, training: Mapping[str, TrainingTask],
                     scorer_config, backend, t: int):
    mix_cfg = replace(config.mixture, seed=derive_seed(config.seed, "mixture", t))
    mixture = build_training_mixture(mix_cfg, training)
    run_cfg = replace(scorer_config, seed=derive_seed(config.seed, "scorer", t))
    return backend.train(run_cfg, mixture)


def _draw_shots(task: EvalTask, k: int, rng: Random) -> tuple[list[Example], list[Example]]:
    """(shots, eval split). Drawing from the eval split shrinks it."""
    if task.train_examples is not None:
        pool = list(task.train_examples)
        shots = rng.sample(pool, min(k, len(pool)))
        return shots, list(task.eval_examples)
    pool = list(task.eval_examples)
    k_eff = min(k, max(0, len(pool) - 1))
    shots = rng.sample(pool, k_eff)
    taken = {ex.example_id for ex in shots}
    return shots, [ex for ex in pool if ex.example_id not in taken]


def _cell_value(config: RunMatrixConfig, model, task: EvalTask, ds: str, k: int,
                t: int, e: int, scorer_config, backend) -> float:
    seed = config.seed
    if k > 0:
        shots, eval_split = _draw_shots(task, k, Random(derive_seed(seed, "shots", t, e, ds, k)))
        expanded = fewshot_expand(task.schema, shots, derive_seed(seed, "ft", t, e, ds, k))
        model = backend.continue_train(model, expanded, scorer_config.epochs,
                                       derive_seed(seed, "ct", t, e, ds, k))
    else:
        eval_split = list(task.eval_examples)
    return evaluate(model, task.schema, eval_split, derive_seed(seed, "eval", t, e, ds))


def _cell_values(config: RunMatrixConfig, models, eval_tasks, ds: str, k: int,
                 scorer_config, backend) -> list[float]:
    task = eval_tasks[ds]
    return [
        _cell_value(config, models[t], task, ds, k, t, e, scorer_config, backend)
        for t in range(config.train_runs)
        for e in range(config.eval_runs)
    ]


def _summarize_cell(values: list[float], config: RunMatrixConfig) -> dict:
    mean, std = aggregate(values, config.mean_kind)
    e = config.eval_runs
    per_train = [
        statistics.stdev(values[t * e:(t + 1) * e]) if e > 1 else 0.0
        for t in range(config.train_runs)
    ]
    return {
        "values": values,
        "mean": mean,
        "std": std,
        "pooled_std": std,
        "per_train_std": per_train,
        "per_train_std_mean": statistics.fmean(per_train),
        "degenerate_std": len(values) == 1,
    }


def run_matrix(config: RunMatrixConfig, training: Mapping[str, TrainingTask],
               eval_tasks: Mapping[str, EvalTask], scorer_config=None,
               backend=None) -> dict:
    """T x E accuracy matrix for every (dataset, K) cell, with aggregates."""
    scorer_config = scorer_config or _scorer.ScorerConfig()
    backend = backend or NativeBackend()
    missing = [ds for ds in config.eval_datasets if ds not in eval_tasks]
    if missing:
        raise ConfigError([f"eval dataset {ds!r} has no eval task" for ds in missing])

    models = {t: _train_run_model(config, training, scorer_config, backend, t)
              for t in range(config.train_runs)}

    cells: list[dict] = []
    failures: list[dict] = []
    for ds in config.eval_datasets:
        multiclass = _is_multiclass(eval_tasks[ds].schema)
        for k in config.nshot:
            base = {"dataset": ds, "nshot": k}
            if multiclass and k > MULTICLASS_SHOT_CAP:
                cells.append(base | {
                    "skipped": True,
                    "reason": f"more than two candidates: ladder capped at {MULTICLASS_SHOT_CAP}-shot",
                })
                continue
            try:
                values = _cell_values(config, models, eval_tasks, ds, k, scorer_config, backend)
                cells.append(base | {"skipped": False} | _summarize_cell(values, config))
            except StatementKitError as exc:
                log.warning("cell (%s, %d-shot) failed: %s", ds, k, exc)
                failures.append(base | {"error": type(exc).__name__, "message": str(exc)})

    return {
        "kind": "eval_report/1",
        "config_digest": config_digest(config),
        "train_runs": config.train_runs,
        "eval_runs": config.eval_runs,
        "mean_kind": config.mean_kind,
        "backend": backend.name,
        "cells": cells,
        "failures": failures,
        "summary": _dataset_summary(cells, config),
    }


def _dataset_summary(cells: list[dict], config: RunMatrixConfig) -> list[dict]:
    """One row per K: the mean (per mean_kind) of the per-dataset cell means."""
    out = []
    for k in config.nshot:
        means = [c["mean"] for c in cells if c["nshot"] == k and not c["skipped"]]
        if not means:
            continue
        row: dict = {"nshot": k, "datasets": len(means)}
        try:
            mean, std = aggregate(means, config.mean_kind)
            row |= {"task_mean": mean, "task_std": std}
        except GeometricNonPositive as exc:
            row |= {"task_mean": None, "aggregate_error": str(exc)}
        out.append(row)
    return out


def recompute_cell(config: RunMatrixConfig, training: Mapping[str, TrainingTask],
                   eval_tasks: Mapping[str, EvalTask], ds: str, k: int,
                   scorer_config=None, backend=None) -> list[float]:
    """Rebuild one cell's T*E values from derived seeds alone."""
    scorer_config = scorer_config or _scorer.ScorerConfig()
    backend = backend or NativeBackend()
    models = {t: _train_run_model(config, training, scorer_config, backend, t)
              for t in range(config.train_runs)}
    return _cell_values(config, models, eval_tasks, ds, k, scorer_config, backend)


# --- sweeps over mixture configuration ---

def _point_config(config: RunMatrixConfig, axis: str, point) -> RunMatrixConfig:
    if axis == "sample_size":
        if not (isinstance(point, int) and point > 0):
            raise ConfigError([f"sample_size point {point!r} must be a positive integer"])
        return replace(config, mixture=replace(config.mixture, per_dataset_n=point, total_budget=None))
    if axis == "spc":
        if not (isinstance(point, int) and point >= 1):
            raise ConfigError([f"spc point {point!r} must be a positive integer"])
        return replace(config, mixture=replace(config.mixture, spc=point))
    if axis == "categories":
        cats = tuple(point)
        bad = [c for c in cats if c not in TASK_CATEGORIES]
        if bad or not cats:
            raise ConfigError([f"categories point {point!r} is not a set of known categories"])
        return replace(config, mixture=replace(config.mixture, selected_categories=cats))
    raise ConfigError([f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}"])


def _point_label(axis: str, point) -> str:
    return "+".join(point) if axis == "categories" else str(point)


def sweep(config: RunMatrixConfig, axis: str, points: Sequence,
          training: Mapping[str, TrainingTask], eval_tasks: Mapping[str, EvalTask],
          scorer_config=None, backend=None) -> dict:
    """One run_matrix per axis point, merged into a single report."""
    if not points:
        raise ConfigError(["sweep needs at least one point"])
    merged_points = []
    failures = []
    for point in points:
        label = _point_label(axis, point)
        point_cfg = _point_config(config, axis, point)
        try:
            report = run_matrix(point_cfg, training, eval_tasks, scorer_config, backend)
        except StatementKitError as exc:
            log.warning("sweep point %s failed: %s", label, exc)
            failures.append({"point": label, "error": type(exc).__name__, "message": str(exc)})
            continue
        merged_points.append({"point": label} | report)
    return {
        "kind": "sweep_report/1",
        "axis": axis,
        "mean_kind": config.mean_kind,
        "points": merged_points,
        "failures": failures,
    }


# --- flat views of reports ---

def report_rows(report: dict) -> list[dict]:
    """One row per cell; sweep reports gain a point column."""
    if report.get("kind") == "sweep_report/1":
        rows = []
        for point in report["points"]:
            for row in report_rows({k: v for k, v in point.items() if k != "point"}):
                rows.append({"point": point["point"]} | row)
        return rows
    rows = []
    for cell in report["cells"]:
        if cell["skipped"]:
            rows.append({"dataset": cell["dataset"], "nshot": cell["nshot"],
                         "n": 0, "mean": "", "std": "", "values": "",
                         "skipped": True, "reason": cell["reason"]})
        else:
            rows.append({"dataset": cell["dataset"], "nshot": cell["nshot"],
                         "n": len(cell["values"]), "mean": cell["mean"], "std": cell["std"],
                         "values": ";".join(f"{v:.6f}" for v in cell["values"]),
                         "skipped": False, "reason": ""})
    return rows


def render_table(report: dict) -> str:
    """Plain text table: one row per point (or per K), one column per dataset."""
    if report.get("kind") == "sweep_report/1":
        blocks = []
        for point in report["points"]:
            sub = render_table({k: v for k, v in point.items() if k != "point"})
            blocks.append(f"[{report['axis']} = {point['point']}]\n{sub}")
        return "\n\n".join(blocks)

    datasets: list[str] = []
    for cell in report["cells"]:
        if cell["dataset"] not in datasets:
            datasets.append(cell["dataset"])
    ks = sorted({c["nshot"] for c in report["cells"]})
    by_key = {(c["dataset"], c["nshot"]): c for c in report["cells"]}

    header = ["nshot"] + datasets + ["task_mean"]
    lines = ["\t".join(header)]
    summary = {row["nshot"]: row for row in report.get("summary", ())}
    for k in ks:
        row = [str(k)]
        for ds in datasets:
            cell = by_key.get((ds, k))
            if cell is None:
                row.append("-")
            elif cell["skipped"]:
                row.append("skip")
            else:
                row.append(f"{cell['mean']:.4f}±{cell['std']:.4f}")
        srow = summary.get(k)
        row.append(f"{srow['task_mean']:.4f}" if srow and srow.get("task_mean") is not None else "-")
        lines.append("\t".join(row))
    return "\n".join(lines)
