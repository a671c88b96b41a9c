"""Balanced sampling and multitask training mixtures.

sample_balanced draws without replacement so that true and false statement
counts differ by at most one (true gets the extra on odd n) and, inside each
truth bucket, per-gold-class counts differ by at most one. Class quota
remainders go round-robin to classes in order of first appearance in the
pool. When a class cannot fill its quota the shortfall is taken from other
classes of the same truth bucket; a remaining deficit shows up as a smaller
output and a logged warning, never as an error.

build_training_mixture applies per-dataset steps: optional statements-per-
category (spc) restriction, which keeps at most spc template families, then
balanced sampling against the dataset's quota. Quotas come either from a
fixed per-dataset size or from an equal split of a total budget with the
remainder handed out one by one in dataset declaration order.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, replace
from random import Random
from typing import Mapping, Sequence

from .errors import EmptyPool, NoDatasetsSelected, StatementKitError
from .schema import TASK_CATEGORIES, TaskSchema
from .statgen import Statement, StatementSet, make_statement_set
from .seeding import derive_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MixtureConfig:
    per_dataset_n: int = 1000
    spc: int | None = None
    selected_categories: tuple[str, ...] | None = None
    total_budget: int | None = None
    seed: int = 0

    def __post_init__(self):
        problems = []
        if self.per_dataset_n < 2:
            problems.append("per_dataset_n must be at least 2")
        if self.spc is not None and self.spc < 1:
            problems.append("spc must be at least 1")
        if self.total_budget is not None and self.total_budget < 1:
            problems.append("total_budget must be positive")
        if self.selected_categories is not None:
            bad = [c for c in self.selected_categories if c not in TASK_CATEGORIES]
            if bad:
                problems.append(f"unknown categories {bad}")
        if problems:
            raise StatementKitError("invalid mixture config: " + "; ".join(problems))


@dataclass(frozen=True)
class TrainingTask:
    schema: TaskSchema
    pool: StatementSet


def sample_balanced(pool: StatementSet, n: int, rng: Random) -> StatementSet:
    """Truth- and class-balanced sample of up to n statements."""
    if len(pool) == 0:
        raise EmptyPool("cannot sample from an empty pool")
    targets = {True: (n + 1) // 2, False: n // 2}
    picked: list[Statement] = []
    deficit = 0
    for truth in (True, False):
        bucket = [s for s in pool if s.truth is truth]
        got = _sample_bucket(bucket, targets[truth], rng)
        deficit += targets[truth] - len(got)
        picked.extend(got)
    if deficit:
        log.warning("balanced sample short by %d of %d requested", deficit, n)
    return make_statement_set(picked, seed=pool.seed, provenance=pool.provenance,
                              fallback_count=pool.fallback_count)


def _sample_bucket(bucket: list[Statement], target: int, rng: Random) -> list[Statement]:
    if target <= 0 or not bucket:
        return []
    by_class: dict[str, list[Statement]] = {}
    for s in bucket:  # first-appearance order defines the round-robin order
        by_class.setdefault(s.gold, []).append(s)
    classes = list(by_class)
    for items in by_class.values():
        rng.shuffle(items)

    base, extra = divmod(target, len(classes))
    quotas = {c: base + (1 if i < extra else 0) for i, c in enumerate(classes)}
    taken: list[Statement] = []
    for c in classes:
        take = min(quotas[c], len(by_class[c]))
        taken.extend(by_class[c][:take])
        del by_class[c][:take]

    # shortfall: keep drawing one statement per class round-robin from spares
    while len(taken) < target:
        progressed = False
        for c in classes:
            if len(taken) >= target:
                break
            if by_class[c]:
                taken.append(by_class[c].pop(0))
                progressed = True
        if not progressed:
            break
    return taken


def apply_spc(schema: TaskSchema, spc: int, rng: Random) -> TaskSchema:
    """Keep at most spc template families, chosen uniformly.

    Whole families are kept or dropped, so label-conditioned coverage of the
    label space survives. Identity when the schema has spc families or fewer.
    """
    families = list(schema.families())
    if spc >= len(families):
        return schema
    keep = set(rng.sample(families, spc))
    templates = tuple(t for t in schema.templates if t.family in keep)
    return replace(schema, templates=templates)


def allocate_quotas(selected: Sequence[tuple[str, Sequence[str]]], total_budget: int) -> dict[str, int]:
    """Split a statement budget equally across datasets.

    selected is (category, dataset_ids) pairs in declaration order; the split
    ignores category boundaries. Remainder goes one statement at a time to the
    earliest datasets. Quotas always sum to total_budget.
    """
    datasets = [ds for _, members in selected for ds in members]
    if not datasets:
        raise NoDatasetsSelected("no datasets to allocate budget over")
    base, extra = divmod(total_budget, len(datasets))
    return {ds: base + (1 if i < extra else 0) for i, ds in enumerate(datasets)}


def build_training_mixture(config: MixtureConfig, tasks: Mapping[str, TrainingTask]) -> StatementSet:
    """Concatenate per-dataset balanced samples and shuffle once."""
    selected_ids = [
        ds for ds, task in tasks.items()
        if config.selected_categories is None or task.schema.category in config.selected_categories
    ]
    if not selected_ids:
        raise NoDatasetsSelected(f"selection {config.selected_categories} matches no dataset")

    if config.total_budget is not None:
        by_cat: list[tuple[str, list[str]]] = []
        for ds in selected_ids:
            cat = tasks[ds].schema.category
            if by_cat and by_cat[-1][0] == cat:
                by_cat[-1][1].append(ds)
            else:
                by_cat.append((cat, [ds]))
        quotas = allocate_quotas(by_cat, config.total_budget)
    else:
        quotas = {ds: config.per_dataset_n for ds in selected_ids}

    mixture: list[Statement] = []
    for ds in selected_ids:
        task = tasks[ds]
        pool = task.pool
        if config.spc is not None:
            restricted = apply_spc(task.schema, config.spc, Random(derive_seed(config.seed, "spc", ds)))
            keep = {t.id for t in restricted.templates}
            pool = make_statement_set(
                (s for s in pool if s.template_id in keep),
                seed=pool.seed, provenance=pool.provenance, fallback_count=pool.fallback_count,
            )
        try:
            sample = sample_balanced(pool, quotas[ds], Random(derive_seed(config.seed, "sample", ds)))
        except StatementKitError as exc:
            raise type(exc)(f"{ds}: {exc}") from exc
        mixture.extend(sample.statements)

    Random(derive_seed(config.seed, "shuffle")).shuffle(mixture)
    return make_statement_set(mixture, seed=config.seed, provenance=mixture_digest(config, tasks))


def mixture_digest(config: MixtureConfig, tasks: Mapping[str, TrainingTask]) -> str:
    doc = {
        "per_dataset_n": config.per_dataset_n,
        "spc": config.spc,
        "selected_categories": list(config.selected_categories) if config.selected_categories else None,
        "total_budget": config.total_budget,
        "seed": config.seed,
        "pools": {ds: task.pool.provenance for ds, task in tasks.items()},
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]
