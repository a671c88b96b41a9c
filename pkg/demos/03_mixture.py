#!/usr/bin/env python3
"""
Building a balanced multitask mixture
=====================================

Pools from several datasets are sampled down to a training mixture that
is balanced on truth and on gold class, with optional caps on templates
per dataset (spc) and a global statement budget.
"""

from collections import Counter

from statementkit import sampler as sa
from statementkit import schema as sc
from statementkit import statgen as sg
from statementkit.synth import fuzz_examples

names = ["qqp", "mnli", "yelp_polarity", "piqa"]
tasks = {}
for name in names:
    schema = sc.load_bundled_schema(name)
    pool = sg.generate_dataset(schema, fuzz_examples(schema, 300, seed=21), seed=8)
    tasks[name] = sa.TrainingTask(schema, pool)
    print(f"{name}: pool of {len(pool)} statements")

# fixed per-dataset size
mixture = sa.build_training_mixture(sa.MixtureConfig(per_dataset_n=400, seed=1), tasks)
print("mixture size:", len(mixture))
print("by dataset:", Counter(s.dataset_id for s in mixture))
print("by truth:", Counter(s.truth for s in mixture))

# per-class balance inside one dataset's slice
qqp_rows = [s for s in mixture if s.dataset_id == "qqp"]
print("qqp gold classes:", Counter(s.gold for s in qqp_rows))

# spc=1 restricts each dataset to a single template family
capped = sa.build_training_mixture(
    sa.MixtureConfig(per_dataset_n=200, spc=1, seed=2), tasks)
for name in names:
    fams = {s.family for s in capped if s.dataset_id == name}
    print(f"{name} families under spc=1: {sorted(fams)}")

# a global budget splits evenly across datasets
budget = sa.build_training_mixture(
    sa.MixtureConfig(total_budget=1000, seed=3), tasks)
print("budget mixture:", len(budget), Counter(s.dataset_id for s in budget))

# category filters narrow which datasets participate
pd_only = sa.build_training_mixture(
    sa.MixtureConfig(per_dataset_n=200, selected_categories=("PD",), seed=4), tasks)
print("PD-only datasets:", sorted({s.dataset_id for s in pd_only}))
