#!/usr/bin/env python3
"""
Scoring through an external worker process
==========================================

Heavier scorer backends run out of process and speak a line-delimited
JSON protocol over stdio. The client spawns the worker, checks the
protocol version in a hello exchange, and then issues train / score /
save requests. Any worker that speaks the protocol can stand in for the
native scorer.
"""

from pathlib import Path

from statementkit import sampler as sa
from statementkit import scorer as sco
from statementkit import statgen as sg
from statementkit.seeding import derive_seed
from statementkit.synth import make_cue_world
from statementkit.xclient import ExternalBackend, WorkerClient

repo = Path(__file__).resolve().parent.parent
ts_worker = repo / "xscorer" / "dist" / "main.js"
if ts_worker.exists():
    endpoint = f"node {ts_worker} --backend tiny"
else:
    # fall back to the mock worker used by the test suite
    endpoint = f"python3 {repo / 'tests' / 'mock_worker.py'}"
print("endpoint:", endpoint)

# raw protocol: the version handshake happens inside the constructor
client = WorkerClient(endpoint)
print("worker backend:", client.backend_name)
trained = client.request("train", statements=[
    {"text": "water is wet", "truth": True},
    {"text": "water is dry", "truth": False},
    {"text": "fire is hot", "truth": True},
    {"text": "fire is cold", "truth": False},
], hyperparameters={}, seed=0)
print("model id:", trained["model_id"])
print("score 2 texts:", client.request(
    "score", model_id=trained["model_id"],
    texts=["a true thing", "a false thing"])["scores"])
client.close()

# the same endpoint wrapped as a training backend
seed = 2
training, (held_schema, held_train, held_eval) = make_cue_world(seed, n_train=120)
tasks = {}
for tid, (schema, examples) in training.items():
    pool = sg.generate_dataset(schema, examples, derive_seed(seed, "pool", tid))
    tasks[tid] = sa.TrainingTask(schema, pool)
mixture = sa.build_training_mixture(sa.MixtureConfig(per_dataset_n=120, seed=seed), tasks)

# worker defaults mirror full-encoder fine-tuning (15 epochs, lr 1e-6);
# the toy backend needs a larger step to show movement
backend = ExternalBackend(endpoint, hyperparameters={"learning_rate": 0.05,
                                                     "epochs": 8})
print("backend name:", backend.name)
model = backend.train(sco.ScorerConfig(seed=seed), mixture)
print("epoch losses:", [round(x, 4) for x in (model.epoch_losses or [])][:5])
print("scores:", [round(s, 3) for s in model.score_texts(["statement one",
                                                          "statement two"])])
blob = backend.model_bytes(model)
print(f"exported model: {len(blob)} bytes")
backend.close()
