"""Run configuration: one JSON file drives every command.

Shape (all sections except schemas/datasets optional):

    {
      "seed": 0,
      "out": "runs",
      "backend": "native",                   // or "external:<command or tcp://host:port>"
      "schemas": ["bundled:qqp", "path/to/custom.schema"],
      "datasets": {
        "qqp": {
          "train": {"synthetic": "fuzz", "n": 200},
          "eval":  {"path": "qqp_dev.tsv", "format": "delimited",
                     "field_map": {"question1": "q1", "question2": "q2", "gold": "label"}}
        }
      },
      "mixture": {"per_dataset_n": 1000, "spc": null, "selected_categories": null,
                   "total_budget": null},
      "scorer":  {"feature_space_bits": 18, "epochs": 5, "learning_rate": 0.1, "l2": 1e-6},
      "matrix":  {"train_runs": 5, "eval_runs": 5, "nshot": [0],
                   "eval_datasets": ["qqp"], "mean_kind": "arithmetic"}
    }

A manifest file is accepted wherever a config is: its embedded resolved
config (and seed) are used, which is how a run is reproduced from its
manifest alone. Validation reports every violation at once.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, FileUnreadable, StatementKitError
from .ingest import FORMATS, ingest
from .sampler import MixtureConfig, TrainingTask
from .schema import TaskSchema, list_bundled_schemas, load_bundled_schema, load_schema
from .scorer import ScorerConfig
from .seeding import derive_seed
from .statgen import generate_dataset
from .synth import fuzz_examples

ENDPOINT_ENV_VAR = "STATEMENTKIT_SCORER_ENDPOINT"

_TOP_KEYS = {"seed", "out", "backend", "schemas", "datasets", "mixture", "scorer", "matrix"}
_SOURCE_KEYS = {"synthetic", "n", "path", "format", "field_map"}
_MATRIX_KEYS = {"train_runs", "eval_runs", "nshot", "eval_datasets", "mean_kind"}


@dataclass
class RunConfig:
    seed: int
    out: str
    backend: str
    schema_specs: tuple[str, ...]
    dataset_specs: dict
    mixture: MixtureConfig
    scorer: ScorerConfig
    matrix: dict | None
    resolved: dict

    @property
    def backend_kind(self) -> str:
        return "external" if self.backend.startswith("external:") else self.backend

    def endpoint(self) -> str:
        """External endpoint, after the environment override."""
        configured = self.backend.split(":", 1)[1] if ":" in self.backend else ""
        return os.environ.get(ENDPOINT_ENV_VAR) or configured


def _check_source(name: str, src, problems: list[str]) -> None:
    if not isinstance(src, dict):
        problems.append(f"{name}: source must be an object")
        return
    unknown = set(src) - _SOURCE_KEYS
    if unknown:
        problems.append(f"{name}: unknown source keys {sorted(unknown)}")
    if "synthetic" in src:
        if src["synthetic"] != "fuzz":
            problems.append(f"{name}: unknown synthetic source {src['synthetic']!r}")
        if not isinstance(src.get("n"), int) or src.get("n", 0) < 1:
            problems.append(f"{name}: synthetic source needs a positive integer n")
        return
    if "path" not in src:
        problems.append(f"{name}: source needs either synthetic or path")
        return
    if not Path(src["path"]).exists():
        problems.append(f"{name}: path {src['path']!r} does not exist")
    if src.get("format") not in FORMATS:
        problems.append(f"{name}: format must be one of {FORMATS}")
    fm = src.get("field_map")
    if not isinstance(fm, dict) or "gold" not in fm:
        problems.append(f"{name}: field_map must be an object mapping 'gold'")


def load_run_config(path, seed_override: int | None = None,
                    out_override: str | None = None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}"]) from exc

    if isinstance(raw, dict) and raw.get("kind") == "manifest/1":
        seed_override = raw["seed"] if seed_override is None else seed_override
        raw = raw["config"]
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: config root must be an object"])

    problems: list[str] = []
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        problems.append(f"unknown top-level keys {sorted(unknown)}")

    seed = seed_override if seed_override is not None else raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        problems.append("seed must be a nonnegative integer")

    out = out_override if out_override is not None else raw.get("out", "runs")

    backend = raw.get("backend", "native")
    if backend != "native" and not (backend.startswith("external:") and backend.split(":", 1)[1]):
        problems.append(f"backend {backend!r} must be 'native' or 'external:<endpoint>'")

    bundled = set(list_bundled_schemas())
    schemas = raw.get("schemas", [])
    if not isinstance(schemas, list) or not schemas:
        problems.append("schemas must be a nonempty list")
        schemas = []
    for spec in schemas:
        if not isinstance(spec, str):
            problems.append(f"schema spec {spec!r} must be a string")
        elif spec.startswith("bundled:"):
            if spec.split(":", 1)[1] not in bundled:
                problems.append(f"no bundled schema named {spec.split(':', 1)[1]!r}")
        elif not Path(spec).exists():
            problems.append(f"schema file {spec!r} does not exist")

    datasets = raw.get("datasets", {})
    if not isinstance(datasets, dict):
        problems.append("datasets must be an object")
        datasets = {}
    for ds, spec in datasets.items():
        if not isinstance(spec, dict) or not set(spec) <= {"train", "eval"}:
            problems.append(f"dataset {ds}: expected an object with train/eval sources")
            continue
        if not spec:
            problems.append(f"dataset {ds}: needs at least one of train/eval")
        for split, src in spec.items():
            _check_source(f"dataset {ds}.{split}", src, problems)

    mixture = MixtureConfig()
    try:
        mixture = MixtureConfig(**{k: tuple(v) if isinstance(v, list) else v
                                   for k, v in raw.get("mixture", {}).items()})
    except TypeError as exc:
        problems.append(f"mixture: {exc}")
    except StatementKitError as exc:
        problems.append(f"mixture: {exc}")

    scorer = ScorerConfig()
    try:
        scorer = ScorerConfig(**{k: tuple(v) if isinstance(v, list) else v
                                 for k, v in raw.get("scorer", {}).items()})
    except TypeError as exc:
        problems.append(f"scorer: {exc}")
    except StatementKitError as exc:
        problems.append(f"scorer: {exc}")

    matrix = raw.get("matrix")
    if matrix is not None:
        if not isinstance(matrix, dict):
            problems.append("matrix must be an object")
            matrix = None
        else:
            unknown = set(matrix) - _MATRIX_KEYS
            if unknown:
                problems.append(f"matrix: unknown keys {sorted(unknown)}")
            for key in ("train_runs", "eval_runs"):
                if key in matrix and (not isinstance(matrix[key], int) or matrix[key] < 1):
                    problems.append(f"matrix.{key} must be a positive integer")
            if "nshot" in matrix and (not isinstance(matrix["nshot"], list)
                                      or any(not isinstance(k, int) or k < 0 for k in matrix["nshot"])):
                problems.append("matrix.nshot must be a list of nonnegative integers")
            if "mean_kind" in matrix and matrix["mean_kind"] not in ("arithmetic", "geometric"):
                problems.append("matrix.mean_kind must be arithmetic or geometric")
            eval_ds = matrix.get("eval_datasets", [])
            if not isinstance(eval_ds, list) or not eval_ds:
                problems.append("matrix.eval_datasets must be a nonempty list")
            elif datasets and any(ds not in datasets for ds in eval_ds):
                missing = [ds for ds in eval_ds if ds not in datasets]
                problems.append(f"matrix.eval_datasets not in datasets: {missing}")

    if problems:
        raise ConfigError(problems)

    resolved = {
        "seed": seed,
        "backend": backend,
        "schemas": list(schemas),
        "datasets": datasets,
        "mixture": {
            "per_dataset_n": mixture.per_dataset_n,
            "spc": mixture.spc,
            "selected_categories": list(mixture.selected_categories) if mixture.selected_categories else None,
            "total_budget": mixture.total_budget,
        },
        "scorer": {
            "feature_space_bits": scorer.feature_space_bits,
            "word_ngrams": list(scorer.word_ngrams),
            "char_ngrams": list(scorer.char_ngrams),
            "epochs": scorer.epochs,
            "learning_rate": scorer.learning_rate,
            "l2": scorer.l2,
        },
        "matrix": matrix,
    }
    return RunConfig(
        seed=seed, out=out, backend=backend,
        schema_specs=tuple(schemas), dataset_specs=datasets,
        mixture=mixture, scorer=scorer, matrix=matrix, resolved=resolved,
    )


def resolve_schemas(config: RunConfig) -> dict[str, TaskSchema]:
    out: dict[str, TaskSchema] = {}
    for spec in config.schema_specs:
        schema = (load_bundled_schema(spec.split(":", 1)[1]) if spec.startswith("bundled:")
                  else load_schema(spec))
        out[schema.dataset_id] = schema
    unknown = [ds for ds in config.dataset_specs if ds not in out]
    if unknown:
        raise ConfigError([f"dataset {ds} has no loaded schema" for ds in unknown])
    return out


def load_split(config: RunConfig, schema: TaskSchema, split: str):
    """Examples for one dataset split, or None when the split is absent."""
    spec = config.dataset_specs.get(schema.dataset_id, {})
    src = spec.get(split)
    if src is None:
        return None, []
    if "synthetic" in src:
        seed = derive_seed(config.seed, "synth", schema.dataset_id, split)
        return fuzz_examples(schema, src["n"], seed), []
    result = ingest(src["path"], src["format"], src["field_map"], schema=schema)
    return result.examples, result.rejects


def build_training_tasks(config: RunConfig, schemas: dict[str, TaskSchema]):
    """(tasks, rejects): one generated statement pool per train split."""
    tasks: dict[str, TrainingTask] = {}
    all_rejects: dict[str, list] = {}
    for ds, schema in schemas.items():
        examples, rejects = load_split(config, schema, "train")
        if rejects:
            all_rejects[ds] = rejects
        if examples is None:
            continue
        pool = generate_dataset(schema, examples, derive_seed(config.seed, "gen", ds))
        tasks[ds] = TrainingTask(schema, pool)
    return tasks, all_rejects
