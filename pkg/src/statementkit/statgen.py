"""Statement generation: verbalize labeled examples into true/false statements.

Per template kind and example:

    label_conditioned    one statement per template; true iff the template's
                         asserted label equals the example gold
    label_slot           one statement per (template, label); true iff the
                         bound label equals the gold
    option_slot          one statement per (template, option field); true iff
                         the bound option field is the gold one
    span_distractor      two statements per template: the gold answer (true)
                         and a distractor (false)

Distractors for span tasks are contiguous whitespace-token spans of the
context field. Tasks without a context field draw the distractor from the
gold answers of the other examples in the batch (answer shuffle). When no
candidate differs from the gold, the last resort is the gold with reversed
token order; if even that equals the gold the negative is dropped. Both
events are counted in the statement set's fallback tally.

The rng is consumed only for distractor drawing, so label and option schemas
generate identically regardless of seed.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, replace
from random import Random
from typing import Iterable, Sequence

from .errors import DistractorExhausted, GenerationError
from .schema import (
    Example,
    LabelConditioned,
    LabelSlot,
    OptionSlot,
    SpanDistractor,
    TaskSchema,
    render,
    schema_fingerprint,
    validate_example,
)
from .seeding import derive_seed

log = logging.getLogger(__name__)

FILE_FORMAT = "statements/1"

# serialized field order is fixed by the file format
_RECORD_FIELDS = ("text", "truth", "dataset_id", "template_id", "family", "example_id", "asserted", "gold")


@dataclass(frozen=True, slots=True)
class Statement:
    text: str
    truth: bool
    dataset_id: str
    template_id: str
    family: str
    example_id: str
    asserted: str
    gold: str
    fallback_distractor: bool = False  # in-memory provenance, not serialized

    def identity(self) -> tuple[str, str, str, str]:
        return (self.dataset_id, self.template_id, self.example_id, self.asserted)


@dataclass(frozen=True)
class StatementSet:
    statements: tuple[Statement, ...]
    seed: int
    provenance: str
    fallback_count: int = 0

    def __len__(self) -> int:
        return len(self.statements)

    def __iter__(self):
        return iter(self.statements)

    def truth_counts(self) -> tuple[int, int]:
        t = sum(1 for s in self.statements if s.truth)
        return t, len(self.statements) - t


def _check_unique(statements: Sequence[Statement]) -> None:
    seen = set()
    for s in statements:
        key = s.identity()
        if key in seen:
            raise GenerationError([(s.example_id, ValueError(f"duplicate statement identity {key}"))])
        seen.add(key)


def make_statement_set(statements: Iterable[Statement], seed: int, provenance: str,
                       fallback_count: int = 0) -> StatementSet:
    stmts = tuple(statements)
    _check_unique(stmts)
    return StatementSet(stmts, seed, provenance, fallback_count)


# --- distractor spans ---

def _tokens(text: str) -> list[str]:
    return text.split()


def make_distractor_span(context: str, gold: str, rng: Random) -> str:
    """Random contiguous token span of context that differs from gold.

    Span token length is drawn uniformly from [1, max(1, 2 * len(gold tokens))]
    clipped to the context length. Raises DistractorExhausted carrying the
    reversed-gold fallback when every candidate span equals gold.
    """
    toks = _tokens(context)
    gold_toks = _tokens(gold)
    fallback = " ".join(reversed(gold_toks))
    if not toks:
        raise DistractorExhausted("context has no tokens", fallback)
    max_len = min(len(toks), max(1, 2 * len(gold_toks)))

    for _ in range(64):
        k = rng.randint(1, max_len)
        start = rng.randint(0, len(toks) - k)
        span = " ".join(toks[start:start + k])
        if span != gold:
            return span

    # rejection failed; scan every span of every admissible length
    for k in range(1, max_len + 1):
        for start in range(len(toks) - k + 1):
            span = " ".join(toks[start:start + k])
            if span != gold:
                return span
    raise DistractorExhausted("every candidate span equals the gold answer", fallback)


def _shuffle_distractor(gold: str, answer_pool: Sequence[str] | None, rng: Random) -> str:
    pool = [a for a in (answer_pool or ()) if a != gold]
    if not pool:
        raise DistractorExhausted(
            "no other gold answer available for answer shuffle",
            " ".join(reversed(_tokens(gold))),
        )
    return pool[rng.randrange(len(pool))]


# --- enumeration ---

def enumerate_statements(schema: TaskSchema, example: Example, rng: Random,
                         answer_pool: Sequence[str] | None = None) -> list[Statement]:
    """All statements the schema derives from one example.

    answer_pool supplies the other examples' gold answers for span tasks that
    have no context field.
    """
    problems = validate_example(schema, example)
    if problems:
        raise ValueError("; ".join(problems))

    out: list[Statement] = []
    for t in schema.templates:
        kind = t.kind
        if isinstance(kind, LabelConditioned):
            out.append(Statement(
                text=render(t, example),
                truth=kind.asserted_label == example.gold,
                dataset_id=schema.dataset_id, template_id=t.id, family=t.family,
                example_id=example.example_id, asserted=kind.asserted_label, gold=example.gold,
            ))
        elif isinstance(kind, LabelSlot):
            for label in schema.labels:
                out.append(Statement(
                    text=render(t, example, label),
                    truth=label == example.gold,
                    dataset_id=schema.dataset_id, template_id=t.id, family=t.family,
                    example_id=example.example_id, asserted=label, gold=example.gold,
                ))
        elif isinstance(kind, OptionSlot):
            for field in kind.option_fields:
                out.append(Statement(
                    text=render(t, example, field),
                    truth=field == example.gold,
                    dataset_id=schema.dataset_id, template_id=t.id, family=t.family,
                    example_id=example.example_id, asserted=field, gold=example.gold,
                ))
        else:
            out.extend(_span_pair(schema, t, kind, example, rng, answer_pool))
    return out


def _span_pair(schema: TaskSchema, t, kind: SpanDistractor, example: Example,
               rng: Random, answer_pool: Sequence[str] | None) -> list[Statement]:
    gold = example.gold
    pair = [Statement(
        text=render(t, example, gold),
        truth=True,
        dataset_id=schema.dataset_id, template_id=t.id, family=t.family,
        example_id=example.example_id, asserted=gold, gold=gold,
    )]
    fallback_used = False
    try:
        if kind.context_field is not None:
            context = example.values.get(kind.context_field, "")
            distractor = make_distractor_span(context, gold, rng)
        else:
            distractor = _shuffle_distractor(gold, answer_pool, rng)
    except DistractorExhausted as exc:
        distractor = exc.fallback
        fallback_used = True
    if distractor == gold:
        # degenerate: even the reversed gold collapses onto the gold; emitting
        # it would either lie about truth or duplicate the positive
        log.warning("%s/%s/%s: distractor degenerate, negative dropped",
                    schema.dataset_id, t.id, example.example_id)
        return pair
    pair.append(Statement(
        text=render(t, example, distractor),
        truth=distractor == gold,
        dataset_id=schema.dataset_id, template_id=t.id, family=t.family,
        example_id=example.example_id, asserted=distractor, gold=gold,
        fallback_distractor=fallback_used,
    ))
    return pair


def expected_statement_count(schema: TaskSchema) -> int:
    """Closed-form statements per example, assuming a distractor exists."""
    n = 0
    for t in schema.templates:
        kind = t.kind
        if isinstance(kind, LabelConditioned):
            n += 1
        elif isinstance(kind, LabelSlot):
            n += len(schema.labels)
        elif isinstance(kind, OptionSlot):
            n += len(kind.option_fields)
        else:
            n += 2
    return n


# --- whole datasets ---

def generate_dataset(schema: TaskSchema, examples: Sequence[Example], seed: int) -> StatementSet:
    """Exhaustive statements for a batch of examples.

    Each example gets an independent rng stream derived from (seed,
    example_id), so generation order cannot change the output. Per-example
    failures are aggregated into one GenerationError.
    """
    golds = [ex.gold for ex in examples]
    statements: list[Statement] = []
    failures: list[tuple[str, Exception]] = []
    fallbacks = 0
    for i, ex in enumerate(examples):
        rng = Random(derive_seed(seed, "example", ex.example_id))
        pool = golds[:i] + golds[i + 1:]
        try:
            stmts = enumerate_statements(schema, ex, rng, answer_pool=pool)
        except Exception as exc:  # noqa: BLE001 - aggregated and re-raised
            failures.append((ex.example_id, exc))
            continue
        fallbacks += sum(1 for s in stmts if s.fallback_distractor)
        statements.extend(stmts)
    if failures:
        raise GenerationError(failures)
    provenance = generation_digest(schema, seed, len(examples))
    return make_statement_set(statements, seed, provenance, fallbacks)


def generation_digest(schema: TaskSchema, seed: int, n_examples: int) -> str:
    doc = {
        "dataset_id": schema.dataset_id,
        "schema": schema_fingerprint(schema),
        "seed": seed,
        "examples": n_examples,
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


# --- serialization ---

def dumps_statements(sset: StatementSet) -> str:
    lines = [json.dumps(
        {"format": FILE_FORMAT, "seed": sset.seed, "digest": sset.provenance,
         "count": len(sset), "fallbacks": sset.fallback_count},
        sort_keys=True, ensure_ascii=False, separators=(",", ":"),
    )]
    for s in sset.statements:
        rec = {f: getattr(s, f) for f in _RECORD_FIELDS}
        lines.append(json.dumps(rec, sort_keys=True, ensure_ascii=False, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def save_statements(path, sset: StatementSet) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_statements(sset))


def load_statements(path) -> StatementSet:
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise ValueError(f"{path}: empty statement file")
        header = json.loads(header_line)
        if header.get("format") != FILE_FORMAT:
            raise ValueError(f"{path}: unknown format {header.get('format')!r}")
        statements = []
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            statements.append(Statement(**{f: rec[f] for f in _RECORD_FIELDS}))
    return StatementSet(tuple(statements), header["seed"], header["digest"],
                        header.get("fallbacks", 0))


def relabel_seed(sset: StatementSet, seed: int) -> StatementSet:
    return replace(sset, seed=seed)
