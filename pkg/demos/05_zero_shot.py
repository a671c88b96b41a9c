#!/usr/bin/env python3
"""
Zero-shot and few-shot inference on an unseen task
==================================================

Train the scorer on statements from three synthetic tasks, then classify
a fourth task it never saw: render one statement per candidate label and
pick the label whose statement scores highest.
"""

from random import Random

from statementkit import infer
from statementkit import sampler as sa
from statementkit import scorer as sco
from statementkit import statgen as sg
from statementkit.seeding import derive_seed
from statementkit.synth import make_cue_world

seed = 0
training, (held_schema, held_train, held_eval) = make_cue_world(seed)

tasks = {}
for tid, (schema, examples) in training.items():
    pool = sg.generate_dataset(schema, examples, derive_seed(seed, "pool", tid))
    tasks[tid] = sa.TrainingTask(schema, pool)

mixture = sa.build_training_mixture(sa.MixtureConfig(per_dataset_n=400, seed=seed), tasks)
model = sco.train(sco.ScorerConfig(feature_space_bits=14, epochs=2, seed=seed), mixture)
print(f"trained on {len(mixture)} statements from {len(tasks)} tasks")

# zero-shot: one template family, one statement per candidate label
family = infer.pick_eval_family(held_schema, Random(derive_seed(seed, "fam")))
preds = infer.predict(model, held_schema, family, held_eval)
print("held-out task:", held_schema.dataset_id, "labels:", held_schema.labels)
print("zero-shot accuracy:", round(infer.accuracy(preds), 3))

# what the model actually compared for the first example
for cand, s in zip(infer.candidate_statements(held_schema, family, held_eval[0]),
                   preds[0].scores):
    print(f"  {s:.3f}  {cand.text}")

# few-shot: expand a handful of labeled examples into statements and
# continue training on them
shots = Random(derive_seed(seed, "shots")).sample(list(held_train), 32)
expanded = infer.fewshot_expand(held_schema, shots, derive_seed(seed, "ft"))
tuned = sco.continue_train(model, expanded, epochs=2)
few = infer.predict(tuned, held_schema, family, held_eval)
print("32-shot accuracy:", round(infer.accuracy(few), 3))
