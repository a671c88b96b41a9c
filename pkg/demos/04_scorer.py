#!/usr/bin/env python3
"""
The hashed n-gram truth scorer
==============================

A logistic regression over hashed word and character n-grams learns to
score statements as true or false. Training is deterministic for a given
seed, and models round-trip through a small binary format.
"""

import numpy as np

from statementkit import scorer as sco
from statementkit.synth import make_marker_corpus

# featurization: word 1-2 grams plus char 3-5 grams, hashed into buckets
config = sco.ScorerConfig(feature_space_bits=14, epochs=5, seed=7)
idx, counts = sco.featurize("The answer is yes.", config)
print(f"{len(idx)} distinct hashed features, counts {counts.tolist()}")

# a corpus whose truth is decided by one marker token is linearly separable
texts, truths = make_marker_corpus(600, seed=19)
rows = [type("Row", (), {"text": t, "truth": y})() for t, y in zip(texts, truths)]

model = sco.train(config, rows[:450])
print("epoch losses:", [round(x, 4) for x in model.epoch_losses])

held = [(sco.score(model, t) > 0.5) == y for t, y in zip(texts[450:], truths[450:])]
print("held-out accuracy:", sum(held) / len(held))

# same config + same data = bit-identical weights
again = sco.train(config, rows[:450])
print("retrain identical:", bool(np.array_equal(model.weights, again.weights)))

# continued training refines an existing model without touching the original
tuned = sco.continue_train(model, rows[:450], epochs=2)
print("weights moved:", not np.array_equal(model.weights, tuned.weights))

# save / load round trip
blob = sco.dumps_model(model)
print(f"serialized model: {len(blob)} bytes, magic {blob[:4]!r}")
back = sco.loads_model(blob)
print("round trip exact:", bool(np.array_equal(back.weights, model.weights)))
