from random import Random

import pytest

from statementkit import schema as sc
from statementkit import statgen as sg
from statementkit import synth
from statementkit.errors import DistractorExhausted, GenerationError


# Test-side oracle: expected statement count per example, by kind. Kept
# independent of the library's own closed-form helper on purpose.
def oracle_count(schema: sc.TaskSchema) -> int:
    n = 0
    for t in schema.templates:
        k = t.kind
        if isinstance(k, sc.LabelConditioned):
            n += 1
        elif isinstance(k, sc.LabelSlot):
            n += len(schema.labels)
        elif isinstance(k, sc.OptionSlot):
            n += len(k.option_fields)
        elif isinstance(k, sc.SpanDistractor):
            n += 2
    return n


def oracle_truth(stmt: sg.Statement) -> bool:
    return stmt.asserted == stmt.gold


def test_mnli_example_counts():
    mnli = sc.load_bundled_schema("mnli")
    ex = sc.Example("e1", {"text1": "the dog ran", "text2": "an animal moved"}, "entailment")
    stmts = sg.enumerate_statements(mnli, ex, Random(0))
    assert len(stmts) == 9
    assert sum(s.truth for s in stmts) == 3
    true_ids = {s.template_id for s in stmts if s.truth}
    assert true_ids == {"quoted_entails", "qa_yes", "labeled_entailment"}


def test_piqa_example_counts():
    piqa = sc.load_bundled_schema("piqa")
    ex = sc.Example("e1", {"goal": "cool soup", "sol1": "blow on it", "sol2": "boil it"}, "sol1")
    stmts = sg.enumerate_statements(piqa, ex, Random(0))
    assert len(stmts) == 8
    assert sum(s.truth for s in stmts) == 4
    for s in stmts:
        assert s.truth == (s.asserted == "sol1")


def test_label_slot_counts():
    massive = sc.load_bundled_schema("massive")
    ex = sc.Example("e1", {"utt": "wake me at seven"}, "alarm")
    stmts = sg.enumerate_statements(massive, ex, Random(0))
    assert len(stmts) == 4 * len(massive.labels)
    assert sum(s.truth for s in stmts) == 4


def test_every_bundled_schema_matches_count_and_truth_oracle():
    for name in sc.list_bundled_schemas():
        schema = sc.load_bundled_schema(name)
        examples = synth.fuzz_examples(schema, 40, seed=7)
        sset = sg.generate_dataset(schema, examples, seed=11)
        assert len(sset) == oracle_count(schema) * len(examples), name
        for s in sset:
            assert s.truth == oracle_truth(s), (name, s)


def test_distractor_span_membership():
    spans = set()
    for seed in range(60):
        spans.add(sg.make_distractor_span("a b c d", "b", Random(seed)))
    assert spans <= {"a", "c", "d", "a b", "b c", "c d"}
    assert "b" not in spans
    assert len(spans) > 1


def test_distractor_deterministic():
    a = sg.make_distractor_span("t1 t2 t3 t4 t5", "t2 t3", Random(42))
    b = sg.make_distractor_span("t1 t2 t3 t4 t5", "t2 t3", Random(42))
    assert a == b


def test_distractor_length_bound():
    # gold has 1 token so spans are at most 2 tokens long
    for seed in range(40):
        span = sg.make_distractor_span("a b c d e f g h", "c", Random(seed))
        assert 1 <= len(span.split()) <= 2


def test_distractor_exhausted_degenerate():
    with pytest.raises(DistractorExhausted) as exc:
        sg.make_distractor_span("x", "x", Random(0))
    assert exc.value.fallback == "x"


def test_degenerate_negative_dropped():
    squad = sc.load_bundled_schema("squad")
    ex = sc.Example("e1", {"context": "x", "question": "q", "answers": "x"}, "x")
    stmts = sg.enumerate_statements(squad, ex, Random(0))
    # 4 templates, gold statement only: the fallback still equals the gold
    assert len(stmts) == 4
    assert all(s.truth for s in stmts)


def test_reversed_gold_fallback_flagged():
    squad = sc.load_bundled_schema("squad")
    # empty context leaves no candidate span; the reversed gold differs
    ex = sc.Example("e1", {"context": "", "question": "q", "answers": "x y"}, "x y")
    stmts = sg.enumerate_statements(squad, ex, Random(0))
    negatives = [s for s in stmts if not s.truth]
    assert len(negatives) == 4
    assert all(s.asserted == "y x" for s in negatives)
    assert all(s.fallback_distractor for s in negatives)


def test_answer_shuffle_uses_other_golds():
    mintaka = sc.load_bundled_schema("mintaka")
    examples = [
        sc.Example(f"e{i}", {"question": f"who is {i}", "answerText": f"person {i}"}, f"person {i}")
        for i in range(3)
    ]
    sset = sg.generate_dataset(mintaka, examples, seed=5)
    assert len(sset) == 8 * 3
    for s in sset:
        if not s.truth:
            assert s.asserted != s.gold
            assert s.asserted in {"person 0", "person 1", "person 2"}


def test_answer_shuffle_without_pool_falls_back():
    mintaka = sc.load_bundled_schema("mintaka")
    ex = sc.Example("e0", {"question": "who", "answerText": "ada lovelace"}, "ada lovelace")
    stmts = sg.enumerate_statements(mintaka, ex, Random(0))
    negatives = [s for s in stmts if not s.truth]
    assert all(s.asserted == "lovelace ada" for s in negatives)
    assert all(s.fallback_distractor for s in negatives)


def test_generate_dataset_deterministic_bytes():
    sciq = sc.load_bundled_schema("sciq")
    examples = synth.fuzz_examples(sciq, 25, seed=3)
    a = sg.dumps_statements(sg.generate_dataset(sciq, examples, seed=9))
    b = sg.dumps_statements(sg.generate_dataset(sciq, examples, seed=9))
    assert a == b
    c = sg.dumps_statements(sg.generate_dataset(sciq, examples, seed=10))
    assert c != a


def test_generation_order_independent_per_example():
    squad = sc.load_bundled_schema("squad")
    examples = synth.fuzz_examples(squad, 12, seed=2)
    fwd = sg.generate_dataset(squad, examples, seed=4)
    rev = sg.generate_dataset(squad, list(reversed(examples)), seed=4)
    assert sorted(s.text for s in fwd) == sorted(s.text for s in rev)


def test_generate_dataset_aggregates_errors():
    mnli = sc.load_bundled_schema("mnli")
    examples = [
        sc.Example("good", {"text1": "a", "text2": "b"}, "neutral"),
        sc.Example("bad1", {"text1": "a", "text2": "b"}, "maybe"),
        sc.Example("bad2", {"text1": "a"}, "neutral"),
    ]
    with pytest.raises(GenerationError) as exc:
        sg.generate_dataset(mnli, examples, seed=1)
    failed_ids = {ex_id for ex_id, _ in exc.value.failures}
    assert failed_ids == {"bad1", "bad2"}


def test_duplicate_identity_rejected():
    s = sg.Statement("t", True, "d", "tmpl", "fam", "ex", "a", "a")
    with pytest.raises(GenerationError):
        sg.make_statement_set([s, s], seed=0, provenance="x")


def test_save_load_round_trip(tmp_path):
    mnli = sc.load_bundled_schema("mnli")
    examples = synth.fuzz_examples(mnli, 10, seed=1)
    sset = sg.generate_dataset(mnli, examples, seed=2)
    path = tmp_path / "mnli.statements.jsonl"
    sg.save_statements(path, sset)
    loaded = sg.load_statements(path)
    assert loaded.seed == sset.seed
    assert loaded.provenance == sset.provenance
    assert loaded.statements == tuple(
        sg.Statement(**{f: getattr(s, f) for f in sg._RECORD_FIELDS}) for s in sset
    )
    # a second save of the loaded set is byte-identical
    path2 = tmp_path / "again.jsonl"
    sg.save_statements(path2, loaded)
    assert path.read_text() == path2.read_text()


def test_truth_counts():
    piqa = sc.load_bundled_schema("piqa")
    examples = synth.fuzz_examples(piqa, 8, seed=0)
    sset = sg.generate_dataset(piqa, examples, seed=0)
    t, f = sset.truth_counts()
    assert t == f == 8 * 4
