"""Zero-shot inference: one candidate statement per possible answer.

A classification example is decided by rendering a statement for every
possible answer with one template family, scoring each statement's
probability of being true, and answering with the highest scorer. Ties go to
the earliest candidate, which makes predictions invariant under any strictly
increasing rescoring of the score vector.

Only kinds with a finite answer set can be evaluated this way:
label_conditioned families (one member per label), label_slot (bind each
label) and option_slot (bind each option field). span_distractor has no
finite candidate set, so choosing it raises UnboundedCandidateSpace.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Sequence

from . import scorer as _scorer
from .errors import UnboundedCandidateSpace
from .schema import (
    Example,
    LabelConditioned,
    LabelSlot,
    OptionSlot,
    StatementTemplate,
    TaskSchema,
    render,
)
from .seeding import derive_seed
from .statgen import StatementSet, generate_dataset


@dataclass(frozen=True, slots=True)
class Candidate:
    asserted: str
    text: str


@dataclass(frozen=True, slots=True)
class Prediction:
    example_id: str
    predicted: str
    gold: str
    scores: tuple[float, ...]

    @property
    def correct(self) -> bool:
        return self.predicted == self.gold


def argmax_first(scores: Sequence[float]) -> int:
    """Index of the largest score; the earliest wins a tie."""
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return best


def evaluable_families(schema: TaskSchema) -> list[str]:
    out = []
    for family, members in schema.families().items():
        if isinstance(members[0].kind, (LabelConditioned, LabelSlot, OptionSlot)):
            out.append(family)
    return out


def pick_eval_family(schema: TaskSchema, rng: Random) -> str:
    families = evaluable_families(schema)
    if not families:
        raise UnboundedCandidateSpace(
            f"{schema.dataset_id}: no template family has a finite candidate set"
        )
    return families[rng.randrange(len(families))]


def _family_members(schema: TaskSchema, family: str) -> tuple[StatementTemplate, ...]:
    members = schema.families().get(family)
    if members is None:
        raise KeyError(f"{schema.dataset_id} has no template family {family!r}")
    return members


def candidate_statements(schema: TaskSchema, family: str, example: Example) -> list[Candidate]:
    """Candidates in a fixed order: labels as declared, options as declared."""
    members = _family_members(schema, family)
    kind = members[0].kind
    if isinstance(kind, LabelConditioned):
        by_label = {t.kind.asserted_label: t for t in members}
        return [Candidate(lab, render(by_label[lab], example, None)) for lab in schema.labels]
    if isinstance(kind, LabelSlot):
        t = members[0]
        return [Candidate(lab, render(t, example, lab)) for lab in schema.labels]
    if isinstance(kind, OptionSlot):
        t = members[0]
        return [Candidate(f, render(t, example, f)) for f in t.kind.option_fields]
    raise UnboundedCandidateSpace(
        f"{schema.dataset_id}: family {family!r} has no finite candidate set"
    )


def score_texts(model, texts: Sequence[str]) -> list[float]:
    """Batch-score with whatever model was handed in.

    External backends expose score_texts; the native model goes through
    the scorer module.
    """
    fn = getattr(model, "score_texts", None)
    if fn is not None:
        return [float(p) for p in fn(list(texts))]
    return _scorer.score_many(model, texts)


def predict(model, schema: TaskSchema, family: str, examples: Sequence[Example]) -> list[Prediction]:
    """One prediction per example, scored in a single batch."""
    per_example: list[list[Candidate]] = [
        candidate_statements(schema, family, ex) for ex in examples
    ]
    flat = [c.text for cands in per_example for c in cands]
    scores = score_texts(model, flat)
    out: list[Prediction] = []
    pos = 0
    for ex, cands in zip(examples, per_example):
        chunk = scores[pos:pos + len(cands)]
        pos += len(cands)
        out.append(Prediction(
            example_id=ex.example_id,
            predicted=cands[argmax_first(chunk)].asserted,
            gold=ex.gold,
            scores=tuple(chunk),
        ))
    return out


def accuracy(predictions: Sequence[Prediction]) -> float:
    if not predictions:
        raise ValueError("no predictions to aggregate")
    return sum(p.correct for p in predictions) / len(predictions)


def candidate_count(schema: TaskSchema, family: str) -> int:
    members = _family_members(schema, family)
    kind = members[0].kind
    if isinstance(kind, (LabelConditioned, LabelSlot)):
        return len(schema.labels)
    if isinstance(kind, OptionSlot):
        return len(kind.option_fields)
    raise UnboundedCandidateSpace(
        f"{schema.dataset_id}: family {family!r} has no finite candidate set"
    )


def fewshot_expand(schema: TaskSchema, shots: Sequence[Example], seed: int) -> StatementSet:
    """Turn a handful of labeled examples into training statements."""
    return generate_dataset(schema, list(shots), derive_seed(seed, "fewshot", schema.dataset_id))
