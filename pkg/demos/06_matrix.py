#!/usr/bin/env python3
"""
Multi-run evaluation matrices and sweeps
========================================

Accuracy from a single run is noisy. The harness trains T models, runs E
evaluations per model, and reports all T*E values per (dataset, K-shot)
cell, plus mean and spread. Sweeps repeat the matrix along one axis.
"""

from statementkit import evalharness as eh
from statementkit import sampler as sa
from statementkit import scorer as sco
from statementkit import statgen as sg
from statementkit.seeding import derive_seed
from statementkit.synth import make_cue_world

seed = 1
training, (held_schema, held_train, held_eval) = make_cue_world(seed)
tasks = {}
for tid, (schema, examples) in training.items():
    pool = sg.generate_dataset(schema, examples, derive_seed(seed, "pool", tid))
    tasks[tid] = sa.TrainingTask(schema, pool)

eval_tasks = {held_schema.dataset_id: eh.EvalTask(held_schema, tuple(held_eval),
                                                  tuple(held_train))}
fast = sco.ScorerConfig(feature_space_bits=14, epochs=2)

config = eh.RunMatrixConfig(
    train_runs=3, eval_runs=3,
    mixture=sa.MixtureConfig(per_dataset_n=400),
    nshot=(0, 32),
    eval_datasets=(held_schema.dataset_id,),
    seed=seed,
)
report = eh.run_matrix(config, tasks, eval_tasks, fast)

for cell in report["cells"]:
    print(f"K={cell['nshot']}: {len(cell['values'])} values, "
          f"mean {cell['mean']:.3f}, std {cell['std']:.3f}, "
          f"pooled {cell['pooled_std']:.3f}")

# the flat table view used by the CLI reports
print(eh.render_table(report))

# any cell can be recomputed from seeds alone; values match exactly
cell0 = report["cells"][0]
redo = eh.recompute_cell(config, tasks, eval_tasks, cell0["dataset"], cell0["nshot"], fast)
print("recompute matches:", redo == cell0["values"])

# sweep one axis: here mixture size, three points, T=E=1 to keep it quick
sweep_cfg = eh.RunMatrixConfig(
    train_runs=1, eval_runs=1, mixture=sa.MixtureConfig(per_dataset_n=400),
    nshot=(0,), eval_datasets=(held_schema.dataset_id,), seed=seed)
swept = eh.sweep(sweep_cfg, "sample_size", [500, 1000, 2000], tasks, eval_tasks, fast)
for point in swept["points"]:
    cell = point["cells"][0]
    print(f"sample_size={point['point']}: mean {cell['mean']:.3f}")
