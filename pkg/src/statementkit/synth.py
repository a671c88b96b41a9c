"""Synthetic data generators for self-checks and demos.

Nothing here touches real datasets. fuzz_examples builds random valid examples
for any schema; the cue-world builders construct small classification tasks
whose truth signal is a shared lexical cue, which is enough for a hashed
n-gram discriminator to transfer zero-shot between tasks.
"""

from __future__ import annotations

from random import Random

from .schema import (
    Example,
    FieldSpec,
    LabelConditioned,
    LabelSlot,
    OptionSlot,
    SpanDistractor,
    StatementTemplate,
    TaskSchema,
    parse_template,
    validate_schema,
)
from .seeding import derive_seed


def _words(rng: Random, lo: int, hi: int, vocab: int = 60) -> str:
    return " ".join(f"w{rng.randrange(vocab)}" for _ in range(rng.randint(lo, hi)))


def fuzz_examples(schema: TaskSchema, n: int, seed: int) -> list[Example]:
    """Random valid examples for a schema. Golds cycle round-robin so every
    label/option class is evenly represented."""
    rng = Random(derive_seed(seed, "fuzz", schema.dataset_id))
    option_fields: list[str] = []
    span_gold_fields: list[str] = []
    for t in schema.templates:
        if isinstance(t.kind, OptionSlot):
            for f in t.kind.option_fields:
                if f not in option_fields:
                    option_fields.append(f)
        elif isinstance(t.kind, SpanDistractor):
            if t.kind.gold_field not in span_gold_fields:
                span_gold_fields.append(t.kind.gold_field)

    has_labels = any(isinstance(t.kind, (LabelConditioned, LabelSlot)) for t in schema.templates)
    out: list[Example] = []
    for i in range(n):
        values: dict[str, str] = {}
        for field in schema.fields:
            if field.type == "context":
                # distinct tokens guarantee a span that differs from any gold
                base = rng.randrange(1000)
                values[field.name] = " ".join(f"c{base}x{j}" for j in range(10))
            elif field.name in span_gold_fields:
                values[field.name] = f"ans{i} v{rng.randrange(1000)}"
            elif field.type == "option":
                values[field.name] = f"opt {field.name} {_words(rng, 1, 3)}"
            else:
                values[field.name] = _words(rng, 2, 6)
        if has_labels:
            gold = schema.labels[i % len(schema.labels)]
        elif option_fields:
            gold = option_fields[i % len(option_fields)]
        else:
            gold = values[span_gold_fields[0]]
        out.append(Example(example_id=f"fz{i:06d}", values=values, gold=gold))
    return out


# --- cue world: synthetic tasks sharing a lexical truth cue ---

CUE_LABELS = ("alpha", "beta", "gamma", "delta")

# alias cue only the held-out task uses; unknown at statement-tuning time,
# learnable from a few shots
CUE_ALIASES = {"alpha": "zorp", "beta": "quell", "gamma": "mirt", "delta": "vash"}


def make_cue_schema(task_id: str, tails: tuple[str, ...], labels=CUE_LABELS,
                    category: str = "IC") -> TaskSchema:
    templates = []
    for j, tail in enumerate(tails):
        text = "{{body}} {{label}} " + tail
        templates.append(StatementTemplate(
            id=f"t{j}", segments=parse_template(text), kind=LabelSlot(), family=f"t{j}",
        ))
    schema = TaskSchema(
        dataset_id=task_id,
        category=category,
        fields=(FieldSpec("body", "text"),),
        labels=tuple(labels),
        templates=tuple(templates),
        gold_field="gold",
    )
    assert validate_schema(schema) == []
    return schema


def make_cue_examples(task_id: str, n: int, seed: int, filler_prefix: str,
                      alias_rate: float = 0.0, labels=CUE_LABELS) -> list[Example]:
    """Examples whose body ends in the gold label word (the shared cue).

    With alias_rate > 0, a fixed fraction of each label's examples ends in the
    task-local alias word instead; those are unsolvable zero-shot.
    """
    rng = Random(derive_seed(seed, "cue", task_id))
    fillers = [f"{filler_prefix}{j}" for j in range(24)]
    out = []
    aliased_per_ten = int(round(alias_rate * 10))
    for i in range(n):
        gold = labels[i % len(labels)]
        use_alias = ((i // len(labels)) % 10) < aliased_per_ten
        cue = CUE_ALIASES[gold] if use_alias else gold
        body_words = rng.sample(fillers, rng.randint(3, 6)) + [cue]
        out.append(Example(
            example_id=f"{task_id}-{i:05d}",
            values={"body": " ".join(body_words)},
            gold=gold,
        ))
    return out


def make_cue_world(seed: int, n_train: int = 400, n_heldout_train: int = 600,
                   n_heldout_eval: int = 160):
    """Three statement-tuning tasks plus one held-out task.

    Returns (training, heldout) where training maps task id to (schema,
    examples) and heldout is (schema, train_examples, eval_examples). The
    held-out task shares the label lexicon with the training tasks but uses
    fresh filler words and template phrasing; 40 percent of its examples carry
    the alias cue instead of the shared one.
    """
    specs = [
        ("cue_a", ("confirmed for the record", "stands as reported")),
        ("cue_b", ("noted by the clerk", "marked in review")),
        ("cue_c", ("logged as stated", "kept on file")),
    ]
    training = {}
    for task_id, tails in specs:
        schema = make_cue_schema(task_id, tails)
        examples = make_cue_examples(task_id, n_train, seed, filler_prefix=task_id[-1] + "f")
        training[task_id] = (schema, examples)

    heldout_schema = make_cue_schema("cue_held", ("entered into the ledger", "accepted by the panel"))
    heldout_train = make_cue_examples("cue_held_train", n_heldout_train, seed,
                                      filler_prefix="hf", alias_rate=0.4)
    heldout_eval = make_cue_examples("cue_held_eval", n_heldout_eval, seed + 1,
                                     filler_prefix="hf", alias_rate=0.4)
    return training, (heldout_schema, heldout_train, heldout_eval)


# --- marker corpus: linearly separable truth for scorer checks ---

def make_marker_corpus(n: int, seed: int, marker: str = "veritas"):
    """(texts, truths) where truth is exactly the presence of the marker token."""
    rng = Random(derive_seed(seed, "marker"))
    texts, truths = [], []
    for i in range(n):
        words = [f"m{rng.randrange(40)}" for _ in range(rng.randint(4, 9))]
        truth = i % 2 == 0
        if truth:
            words.insert(rng.randrange(len(words) + 1), marker)
        texts.append(" ".join(words))
        truths.append(truth)
    return texts, truths
