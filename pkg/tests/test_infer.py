"""Inference tests: argmax oracle, tie handling, candidate construction."""

import math
from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import statementkit.infer as inf
import statementkit.schema as sc
from statementkit.errors import UnboundedCandidateSpace
from statementkit.schema import Example
from statementkit.statgen import generate_dataset
from statementkit.synth import fuzz_examples


class FixedScores:
    """score_texts backend that looks scores up by exact text."""

    def __init__(self, table):
        self.table = table
        self.calls = 0

    def score_texts(self, texts):
        self.calls += 1
        return [self.table[t] for t in texts]


# --- argmax against a brute-force oracle, ties included ---

def test_argmax_first_matches_oracle():
    rng = Random(13)
    for _ in range(10_000):
        n = rng.randint(1, 8)
        # one-decimal grid forces frequent ties
        scores = [round(rng.random(), 1) for _ in range(n)]
        want = scores.index(max(scores))
        assert inf.argmax_first(scores) == want


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=10))
def test_argmax_first_property(scores):
    got = inf.argmax_first(scores)
    assert scores[got] == max(scores)
    assert all(s < scores[got] for s in scores[:got])


def test_monotone_rescoring_never_changes_predictions():
    rng = Random(99)
    transforms = [
        lambda p: 0.3 * p + 0.1,
        lambda p: p ** 3,
        lambda p: math.tanh(2 * p),
        lambda p: 1 - math.exp(-3 * p),
    ]
    for trial in range(50):
        scores = [round(rng.random(), 2) for _ in range(rng.randint(2, 6))]
        base = inf.argmax_first(scores)
        for f in transforms:
            assert inf.argmax_first([f(s) for s in scores]) == base, (trial, scores)


# --- candidate construction on bundled schemas ---

def test_label_conditioned_candidates():
    schema = sc.load_bundled_schema("mnli")
    ex = Example("e0", {"text1": "A man naps.", "text2": "Someone sleeps."}, "entailment")
    cands = inf.candidate_statements(schema, "quoted", ex)
    assert [c.asserted for c in cands] == list(schema.labels)
    by_label = {t.kind.asserted_label: t for t in schema.families()["quoted"]}
    for c in cands:
        assert c.text == sc.render(by_label[c.asserted], ex, None)


def test_label_slot_candidates():
    schema = sc.load_bundled_schema("massive")
    ex = fuzz_examples(schema, 1, seed=4)[0]
    family = inf.evaluable_families(schema)[0]
    cands = inf.candidate_statements(schema, family, ex)
    assert [c.asserted for c in cands] == list(schema.labels)
    assert len({c.text for c in cands}) == len(schema.labels)


def test_option_slot_candidates():
    schema = sc.load_bundled_schema("piqa")
    ex = Example("e0", {"goal": "open a jar", "sol1": "twist the lid", "sol2": "paint the lid"}, "sol1")
    family = inf.evaluable_families(schema)[0]
    cands = inf.candidate_statements(schema, family, ex)
    assert [c.asserted for c in cands] == ["sol1", "sol2"]
    assert "twist the lid" in cands[0].text
    assert "paint the lid" in cands[1].text


def test_span_only_schema_has_no_candidates():
    schema = sc.load_bundled_schema("squad")
    assert inf.evaluable_families(schema) == []
    with pytest.raises(UnboundedCandidateSpace):
        inf.pick_eval_family(schema, Random(0))
    with pytest.raises(UnboundedCandidateSpace):
        inf.candidate_statements(schema, schema.templates[0].family,
                                 fuzz_examples(schema, 1, seed=0)[0])


def test_pick_eval_family_covers_all_choices():
    schema = sc.load_bundled_schema("mnli")
    seen = {inf.pick_eval_family(schema, Random(s)) for s in range(60)}
    assert seen == set(inf.evaluable_families(schema))
    # same rng state, same choice
    assert inf.pick_eval_family(schema, Random(5)) == inf.pick_eval_family(schema, Random(5))


def test_candidate_count():
    assert inf.candidate_count(sc.load_bundled_schema("mnli"), "quoted") == 3
    piqa = sc.load_bundled_schema("piqa")
    assert inf.candidate_count(piqa, piqa.templates[0].family) == 2
    massive = sc.load_bundled_schema("massive")
    assert inf.candidate_count(massive, massive.templates[0].family) == 18


# --- prediction semantics ---

def _mnli_fixture(n=12):
    schema = sc.load_bundled_schema("mnli")
    examples = fuzz_examples(schema, n, seed=7)
    return schema, examples


def test_predict_with_perfect_scorer_is_exact():
    schema, examples = _mnli_fixture()
    family = "quoted"
    table = {}
    for ex in examples:
        for c in inf.candidate_statements(schema, family, ex):
            table[c.text] = 0.9 if c.asserted == ex.gold else 0.1
    backend = FixedScores(table)
    preds = inf.predict(backend, schema, family, examples)
    assert inf.accuracy(preds) == 1.0
    assert backend.calls == 1  # one batch for the whole split
    for p, ex in zip(preds, examples):
        assert p.example_id == ex.example_id and p.gold == ex.gold and p.correct


def test_predict_with_inverted_scorer_is_never_right():
    schema, examples = _mnli_fixture()
    table = {}
    for ex in examples:
        for c in inf.candidate_statements(schema, "quoted", ex):
            table[c.text] = 0.1 if c.asserted == ex.gold else 0.9
    preds = inf.predict(FixedScores(table), schema, "quoted", examples)
    assert inf.accuracy(preds) == 0.0


def test_predict_tie_goes_to_first_candidate():
    schema, examples = _mnli_fixture(5)
    table = {}
    for ex in examples:
        for c in inf.candidate_statements(schema, "quoted", ex):
            table[c.text] = 0.5
    preds = inf.predict(FixedScores(table), schema, "quoted", examples)
    assert all(p.predicted == schema.labels[0] for p in preds)


def test_predict_scores_align_with_candidates():
    schema, examples = _mnli_fixture(3)
    table = {}
    for ex in examples:
        for i, c in enumerate(inf.candidate_statements(schema, "quoted", ex)):
            table[c.text] = (hash(c.text) % 97) / 97
    preds = inf.predict(FixedScores(table), schema, "quoted", examples)
    for p, ex in zip(preds, examples):
        cands = inf.candidate_statements(schema, "quoted", ex)
        assert p.scores == tuple(table[c.text] for c in cands)
        assert p.predicted == cands[inf.argmax_first(p.scores)].asserted


def test_accuracy_empty_rejected():
    with pytest.raises(ValueError):
        inf.accuracy([])


def test_fewshot_expand_matches_generator():
    schema = sc.load_bundled_schema("qqp")
    shots = fuzz_examples(schema, 8, seed=3)
    got = inf.fewshot_expand(schema, shots, seed=42)
    want_seed = got.seed
    want = generate_dataset(schema, shots, want_seed)
    assert [s.text for s in got] == [s.text for s in want]
    assert [s.truth for s in got] == [s.truth for s in want]
    # different harness seed, different derived generation seed
    assert inf.fewshot_expand(schema, shots, seed=43).seed != want_seed
