from collections import Counter
from random import Random

import pytest

from statementkit import sampler as sp
from statementkit import schema as sc
from statementkit import statgen as sg
from statementkit import synth
from statementkit.errors import EmptyPool, NoDatasetsSelected, StatementKitError


def make_pool(spec, dataset="toy"):
    """spec: list of (gold_class, truth, count). Statements get unique ids."""
    stmts = []
    i = 0
    for gold, truth, count in spec:
        for _ in range(count):
            asserted = gold if truth else f"not-{gold}"
            stmts.append(sg.Statement(
                text=f"stmt {i} {gold} {truth}", truth=truth, dataset_id=dataset,
                template_id="t0", family="t0", example_id=f"e{i}", asserted=asserted, gold=gold,
            ))
            i += 1
    return sg.make_statement_set(stmts, seed=0, provenance="test-pool")


def recount(sample):
    truths = Counter(s.truth for s in sample)
    per_class = {
        truth: Counter(s.gold for s in sample if s.truth is truth)
        for truth in (True, False)
    }
    return truths, per_class


def test_round_robin_remainder_order():
    pool = make_pool([("c1", True, 800), ("c2", True, 800), ("c3", True, 800),
                      ("c1", False, 800), ("c2", False, 800), ("c3", False, 800)])
    sample = sp.sample_balanced(pool, 4000, Random(0))
    truths, per_class = recount(sample)
    assert truths[True] == 2000 and truths[False] == 2000
    assert per_class[True] == {"c1": 667, "c2": 667, "c3": 666}


def test_odd_n_extra_goes_to_true():
    pool = make_pool([("c", True, 10), ("c", False, 10)])
    sample = sp.sample_balanced(pool, 5, Random(1))
    truths, _ = recount(sample)
    assert truths[True] == 3 and truths[False] == 2


def test_balance_and_skew_over_random_pools():
    rng = Random(1234)
    for trial in range(30):
        k = rng.randint(2, 5)
        spec = []
        for c in range(k):
            spec.append((f"c{c}", True, rng.randint(40, 80)))
            spec.append((f"c{c}", False, rng.randint(40, 80)))
        pool = make_pool(spec)
        n = rng.randint(10, 2 * k * 40 - 1)
        sample = sp.sample_balanced(pool, n, Random(trial))
        truths, per_class = recount(sample)
        assert len(sample) == n
        assert abs(truths[True] - truths[False]) <= 1
        for truth in (True, False):
            counts = [per_class[truth].get(f"c{c}", 0) for c in range(k)]
            assert max(counts) - min(counts) <= 1, (trial, truth, counts)
        # without replacement: identities unique and within availability
        ids = [s.identity() for s in sample]
        assert len(set(ids)) == len(ids)


def test_shortfall_taken_from_same_bucket():
    pool = make_pool([("rare", True, 10), ("common", True, 500),
                      ("rare", False, 300), ("common", False, 300)])
    sample = sp.sample_balanced(pool, 800, Random(0))
    truths, per_class = recount(sample)
    # true bucket can only reach 400 by overdrawing the common class
    assert truths[True] == 400 and truths[False] == 400
    assert per_class[True]["rare"] == 10
    assert per_class[True]["common"] == 390


def test_deficit_reported_in_size():
    pool = make_pool([("c", True, 3), ("c", False, 100)])
    sample = sp.sample_balanced(pool, 50, Random(0))
    truths, _ = recount(sample)
    assert truths[True] == 3 and truths[False] == 25
    assert len(sample) == 28


def test_seed_changes_membership_not_size():
    pool = make_pool([("a", True, 50), ("b", True, 50), ("a", False, 50), ("b", False, 50)])
    s1 = sp.sample_balanced(pool, 60, Random(1))
    s2 = sp.sample_balanced(pool, 60, Random(2))
    assert len(s1) == len(s2) == 60
    assert {s.example_id for s in s1} != {s.example_id for s in s2}


def test_empty_pool_raises():
    empty = sg.StatementSet((), 0, "none")
    with pytest.raises(EmptyPool):
        sp.sample_balanced(empty, 10, Random(0))


def test_apply_spc_mnli():
    mnli = sc.load_bundled_schema("mnli")
    restricted = sp.apply_spc(mnli, 1, Random(3))
    assert len(restricted.families()) == 1
    assert len(restricted.templates) == 3
    assert sorted(t.kind.asserted_label for t in restricted.templates) == sorted(mnli.labels)
    assert sc.validate_schema(restricted) == []


def test_apply_spc_identity_when_enough():
    piqa = sc.load_bundled_schema("piqa")
    assert sp.apply_spc(piqa, 4, Random(0)) is piqa
    assert sp.apply_spc(piqa, 9, Random(0)) is piqa


def test_apply_spc_deterministic():
    yelp = sc.load_bundled_schema("yelp_polarity")
    a = sp.apply_spc(yelp, 2, Random(7))
    b = sp.apply_spc(yelp, 2, Random(7))
    assert [t.id for t in a.templates] == [t.id for t in b.templates]


def test_allocate_quotas():
    assert sp.allocate_quotas([("PD", ["a"]), ("CR", ["b", "c"])], 100) == {"a": 34, "b": 33, "c": 33}
    sixteen = [("X", [f"d{i}"]) for i in range(16)]
    quotas = sp.allocate_quotas([("QA", [ds for _, (ds,) in [(c, m) for c, m in sixteen]])], 100_000)
    assert set(quotas.values()) == {6250}
    assert sum(quotas.values()) == 100_000


def _toy_tasks():
    tasks = {}
    for name in ("mnli", "piqa", "tweet_offensive"):
        schema = sc.load_bundled_schema(name)
        examples = synth.fuzz_examples(schema, 120, seed=5)
        tasks[name] = sp.TrainingTask(schema, sg.generate_dataset(schema, examples, seed=6))
    return tasks


def test_build_training_mixture_sizes_and_balance():
    tasks = _toy_tasks()
    cfg = sp.MixtureConfig(per_dataset_n=100, seed=11)
    mix = sp.build_training_mixture(cfg, tasks)
    assert len(mix) == 300
    per_ds = Counter(s.dataset_id for s in mix)
    assert per_ds == {"mnli": 100, "piqa": 100, "tweet_offensive": 100}
    truths = Counter(s.truth for s in mix)
    assert abs(truths[True] - truths[False]) <= 3  # at most 1 per dataset


def test_build_training_mixture_budget():
    tasks = _toy_tasks()
    cfg = sp.MixtureConfig(total_budget=250, seed=11)
    mix = sp.build_training_mixture(cfg, tasks)
    per_ds = Counter(s.dataset_id for s in mix)
    assert sum(per_ds.values()) == 250
    assert sorted(per_ds.values(), reverse=True) == [84, 83, 83]


def test_build_training_mixture_category_selection():
    tasks = _toy_tasks()
    cfg = sp.MixtureConfig(per_dataset_n=50, selected_categories=("CR",), seed=1)
    mix = sp.build_training_mixture(cfg, tasks)
    assert {s.dataset_id for s in mix} == {"piqa"}
    with pytest.raises(NoDatasetsSelected):
        sp.build_training_mixture(
            sp.MixtureConfig(per_dataset_n=50, selected_categories=("SU",), seed=1), tasks
        )


def test_build_training_mixture_spc_restricts_templates():
    tasks = _toy_tasks()
    cfg = sp.MixtureConfig(per_dataset_n=60, spc=1, seed=2)
    mix = sp.build_training_mixture(cfg, tasks)
    for ds in ("mnli", "piqa", "tweet_offensive"):
        fams = {s.family for s in mix if s.dataset_id == ds}
        assert len(fams) == 1, ds


def test_mixture_deterministic():
    tasks = _toy_tasks()
    cfg = sp.MixtureConfig(per_dataset_n=80, seed=9)
    a = sp.build_training_mixture(cfg, tasks)
    b = sp.build_training_mixture(cfg, tasks)
    assert [s.text for s in a] == [s.text for s in b]
    c = sp.build_training_mixture(sp.MixtureConfig(per_dataset_n=80, seed=10), tasks)
    assert [s.text for s in c] != [s.text for s in a]
    assert len(c) == len(a)


def test_mixture_config_validation():
    with pytest.raises(StatementKitError):
        sp.MixtureConfig(per_dataset_n=1)
    with pytest.raises(StatementKitError):
        sp.MixtureConfig(spc=0)
    with pytest.raises(StatementKitError):
        sp.MixtureConfig(selected_categories=("BOGUS",))
