#!/usr/bin/env python3
"""
From labeled examples to true/false statements
==============================================

Every example becomes a block of statements: each template asserts one
candidate answer, and the statement is true exactly when the asserted
answer matches the gold label.
"""

from collections import Counter

from statementkit import schema as sc
from statementkit import statgen as sg
from statementkit.synth import fuzz_examples

mnli = sc.load_bundled_schema("mnli")
examples = fuzz_examples(mnli, 4, seed=11)

sset = sg.generate_dataset(mnli, examples, seed=5)
print(f"{len(examples)} examples -> {len(sset)} statements")
print(f"per example: {sg.expected_statement_count(mnli)}")

# the first example's block, truth flag first
for s in list(sset)[: sg.expected_statement_count(mnli)]:
    print(f"  {str(s.truth):5}  [{s.family}] {s.text}")

# truth counts follow from the schema shape, not from chance
print(Counter(s.truth for s in sset))

# span-distractor tasks pull a wrong span out of the context
squad = sc.load_bundled_schema("squad")
sq_set = sg.generate_dataset(squad, fuzz_examples(squad, 2, seed=3), seed=9)
for s in list(sq_set)[:4]:
    print(f"  {str(s.truth):5} asserted={s.asserted!r} gold={s.gold!r}")

# statement sets round-trip through a line-oriented file format
path = "/tmp/demo_statements.jsonl"
sg.save_statements(path, sset)
again = sg.load_statements(path)
print("round trip ok:", list(again) == list(sset))
