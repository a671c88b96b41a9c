"""Task schemas and the statement template DSL.

A task schema declares the fields, label space, and statement templates of one
dataset. Template text is plain prose with placeholders:

    {{field}}            insert the example's field value verbatim
    {{a/b}}              choice placeholder: one of several alternatives is
                         bound at generation time (option fields, or a gold
                         answer versus the reserved name ``random_span``)
    {{label}}            reserved name: the asserted label text is bound in

Placeholders are the span from a ``{{`` to the first following ``}}``; names
may not contain braces or slashes and may not be empty.

Schema file format (UTF-8, line oriented):

    dataset_id: piqa
    category: CR
    fields: goal: text, sol1: option, sol2: option
    labels:
    gold_field: answer

    template {
      id: plain
      kind: option_slot
      text: {{goal}} {{sol1/sol2}}
    }

``labels`` may be empty for option and span tasks. Inside a template block the
keys are ``id``, ``family`` (defaults to the id), ``kind``, ``asserted_label``
(label_conditioned only) and ``text``. The text value is taken verbatim to the
end of the line; ``\\n`` and ``\\\\`` escapes produce a newline and a
backslash. Template order is significant and is preserved.

Template kinds:

    label_conditioned    the template text itself asserts one label
    label_slot           the asserted label is bound into ``{{label}}``
    option_slot          one choice placeholder over option fields
    span_distractor      one choice placeholder ``{{gold/random_span}}``
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

from .errors import (
    BindingKindMismatch,
    EmptyPlaceholder,
    MissingField,
    NestedPlaceholder,
    SchemaFormatError,
    UnclosedPlaceholder,
)

TASK_CATEGORIES = ("PD", "CR", "NLI", "QA", "SA", "WSD", "IC", "OLI", "SU")

FIELD_TYPES = ("text", "option", "answer-span", "context")

RESERVED_LABEL = "label"
RESERVED_SPAN = "random_span"

KIND_NAMES = ("label_conditioned", "label_slot", "option_slot", "span_distractor")


# --- segments ---

@dataclass(frozen=True, slots=True)
class Literal:
    text: str


@dataclass(frozen=True, slots=True)
class Placeholder:
    names: tuple[str, ...]

    @property
    def is_choice(self) -> bool:
        return len(self.names) > 1


Segment = Literal | Placeholder


# --- template kinds ---

@dataclass(frozen=True, slots=True)
class LabelConditioned:
    asserted_label: str


@dataclass(frozen=True, slots=True)
class LabelSlot:
    pass


@dataclass(frozen=True, slots=True)
class OptionSlot:
    option_fields: tuple[str, ...]
    answer_field: str


@dataclass(frozen=True, slots=True)
class SpanDistractor:
    gold_field: str
    context_field: str | None


TemplateKind = LabelConditioned | LabelSlot | OptionSlot | SpanDistractor


@dataclass(frozen=True, slots=True)
class StatementTemplate:
    id: str
    segments: tuple[Segment, ...]
    kind: TemplateKind
    family: str

    @property
    def text(self) -> str:
        return serialize_segments(self.segments)


@dataclass(frozen=True, slots=True)
class FieldSpec:
    name: str
    type: str


@dataclass(frozen=True, slots=True)
class TaskSchema:
    dataset_id: str
    category: str
    fields: tuple[FieldSpec, ...]
    labels: tuple[str, ...]
    templates: tuple[StatementTemplate, ...]
    gold_field: str

    def field_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def context_field(self) -> str | None:
        for f in self.fields:
            if f.type == "context":
                return f.name
        return None

    def families(self) -> dict[str, tuple[StatementTemplate, ...]]:
        """Family id -> member templates, in first-declaration order."""
        out: dict[str, list[StatementTemplate]] = {}
        for t in self.templates:
            out.setdefault(t.family, []).append(t)
        return {k: tuple(v) for k, v in out.items()}


@dataclass(frozen=True)
class Example:
    example_id: str
    values: dict[str, str]
    gold: str


# --- template parsing ---

def parse_template(text: str) -> tuple[Segment, ...]:
    """Split template text into literal and placeholder segments.

    serialize_segments(parse_template(t)) == t for every t that parses.
    """
    segments: list[Segment] = []
    pos = 0
    while True:
        start = text.find("{{", pos)
        if start == -1:
            if pos < len(text):
                segments.append(Literal(text[pos:]))
            break
        if start > pos:
            segments.append(Literal(text[pos:start]))
        end = text.find("}}", start + 2)
        if end == -1:
            raise UnclosedPlaceholder(f"no closing '}}}}' after position {start}: {text!r}")
        inner = text[start + 2:end]
        if "{" in inner or "}" in inner:
            raise NestedPlaceholder(f"brace inside placeholder at position {start}: {text!r}")
        names = tuple(inner.split("/"))
        if any(n == "" for n in names):
            raise EmptyPlaceholder(f"empty placeholder name at position {start}: {text!r}")
        segments.append(Placeholder(names))
        pos = end + 2
    return tuple(segments)


def serialize_segments(segments: tuple[Segment, ...]) -> str:
    parts = []
    for seg in segments:
        if isinstance(seg, Literal):
            parts.append(seg.text)
        else:
            parts.append("{{" + "/".join(seg.names) + "}}")
    return "".join(parts)


def placeholder_skeleton(segments: tuple[Segment, ...]) -> tuple:
    """Positions and names of placeholders, ignoring literal text.

    Templates in one family must share this skeleton; they are paraphrases of
    each other that differ only in the label-bearing prose.
    """
    return tuple(
        (i, seg.names) for i, seg in enumerate(segments) if isinstance(seg, Placeholder)
    )


# --- rendering ---

def render(template: StatementTemplate, example: Example, binding: str | None = None) -> str:
    """Instantiate a template against one example.

    The binding depends on the kind: None for label_conditioned, the asserted
    label text for label_slot, the chosen option field name for option_slot,
    and the span text to insert for span_distractor. Field values are inserted
    verbatim, no trimming or casefolding.
    """
    kind = template.kind
    if isinstance(kind, LabelConditioned):
        if binding is not None:
            raise BindingKindMismatch(f"{template.id}: label_conditioned takes no binding")
    elif binding is None:
        raise BindingKindMismatch(f"{template.id}: {type(kind).__name__} requires a binding")
    if isinstance(kind, OptionSlot) and binding not in kind.option_fields:
        raise BindingKindMismatch(
            f"{template.id}: binding {binding!r} is not one of the option fields {kind.option_fields}"
        )

    parts: list[str] = []
    for seg in template.segments:
        if isinstance(seg, Literal):
            parts.append(seg.text)
            continue
        if seg.is_choice:
            if isinstance(kind, OptionSlot):
                try:
                    parts.append(example.values[binding])  # type: ignore[index]
                except KeyError:
                    raise MissingField(f"{example.example_id}: missing field {binding!r}") from None
            elif isinstance(kind, SpanDistractor):
                parts.append(binding)  # type: ignore[arg-type]
            else:
                raise BindingKindMismatch(f"{template.id}: choice placeholder in {type(kind).__name__}")
        elif seg.names[0] == RESERVED_LABEL:
            if not isinstance(kind, LabelSlot):
                raise BindingKindMismatch(f"{template.id}: {{{{label}}}} outside a label_slot template")
            parts.append(binding)  # type: ignore[arg-type]
        else:
            name = seg.names[0]
            try:
                parts.append(example.values[name])
            except KeyError:
                raise MissingField(f"{example.example_id}: missing field {name!r}") from None
    return "".join(parts)


# --- validation ---

def validate_schema(schema: TaskSchema) -> list[str]:
    """Return every invariant violation, empty when the schema is sound."""
    v: list[str] = []
    if not schema.dataset_id:
        v.append("dataset_id is empty")
    if schema.category not in TASK_CATEGORIES:
        v.append(f"category {schema.category!r} is not one of {TASK_CATEGORIES}")
    if not schema.gold_field:
        v.append("gold_field is empty")

    names = [f.name for f in schema.fields]
    dup_fields = {n for n in names if names.count(n) > 1}
    if dup_fields:
        v.append(f"duplicate field names: {sorted(dup_fields)}")
    for f in schema.fields:
        if f.type not in FIELD_TYPES:
            v.append(f"field {f.name!r} has unknown type {f.type!r}")
        if f.name in (RESERVED_LABEL, RESERVED_SPAN):
            v.append(f"field name {f.name!r} is reserved")
    declared = set(names)

    dup_labels = {l for l in schema.labels if list(schema.labels).count(l) > 1}
    if dup_labels:
        v.append(f"duplicate labels: {sorted(dup_labels)}")

    context_fields = [f.name for f in schema.fields if f.type == "context"]
    if len(context_fields) > 1:
        v.append(f"more than one context field: {context_fields}")

    if not schema.templates:
        v.append("schema declares no templates")
    ids = [t.id for t in schema.templates]
    dup_ids = {i for i in ids if ids.count(i) > 1}
    if dup_ids:
        v.append(f"duplicate template ids: {sorted(dup_ids)}")

    needs_labels = any(isinstance(t.kind, (LabelConditioned, LabelSlot)) for t in schema.templates)
    if needs_labels and not schema.labels:
        v.append("label-bearing templates but no labels declared")

    for t in schema.templates:
        v.extend(_validate_template(schema, t, declared))

    # per-family checks
    for fam, members in schema.families().items():
        kinds = {type(m.kind) for m in members}
        if len(kinds) > 1:
            v.append(f"family {fam!r} mixes template kinds")
            continue
        skeletons = {placeholder_skeleton(m.segments) for m in members}
        if len(skeletons) > 1:
            v.append(f"family {fam!r} members do not share a placeholder skeleton")
        if isinstance(members[0].kind, LabelConditioned):
            asserted = [m.kind.asserted_label for m in members]
            if len(set(asserted)) != len(asserted):
                v.append(f"family {fam!r} asserts a label more than once")
            missing = [l for l in schema.labels if l not in asserted]
            if missing:
                v.append(f"family {fam!r} does not assert labels {missing}")

    # every label asserted by at least one label_conditioned template
    lc = [t for t in schema.templates if isinstance(t.kind, LabelConditioned)]
    if lc:
        asserted = {t.kind.asserted_label for t in lc}
        for label in schema.labels:
            if label not in asserted:
                v.append(f"label {label!r} asserted by no label_conditioned template")
    return v


def _validate_template(schema: TaskSchema, t: StatementTemplate, declared: set[str]) -> list[str]:
    v: list[str] = []
    placeholders = [s for s in t.segments if isinstance(s, Placeholder)]
    choices = [s for s in placeholders if s.is_choice]
    kind = t.kind

    for ph in placeholders:
        for name in ph.names:
            if name in declared or name == RESERVED_LABEL:
                continue
            if name == RESERVED_SPAN and isinstance(kind, SpanDistractor):
                continue
            v.append(f"template {t.id!r}: placeholder name {name!r} resolves to nothing")

    label_slots = [p for p in placeholders if not p.is_choice and p.names[0] == RESERVED_LABEL]
    if isinstance(kind, LabelConditioned):
        if kind.asserted_label not in schema.labels:
            v.append(f"template {t.id!r}: asserted label {kind.asserted_label!r} not in labels")
        if label_slots:
            v.append(f"template {t.id!r}: label_conditioned must not contain {{{{label}}}}")
        if choices:
            v.append(f"template {t.id!r}: label_conditioned must not contain a choice placeholder")
    elif isinstance(kind, LabelSlot):
        if len(label_slots) != 1:
            v.append(f"template {t.id!r}: label_slot needs exactly one {{{{label}}}}, found {len(label_slots)}")
        if choices:
            v.append(f"template {t.id!r}: label_slot must not contain a choice placeholder")
    elif isinstance(kind, OptionSlot):
        if label_slots:
            v.append(f"template {t.id!r}: option_slot must not contain {{{{label}}}}")
        if len(choices) != 1:
            v.append(f"template {t.id!r}: option_slot needs exactly one choice placeholder, found {len(choices)}")
        else:
            ch = choices[0]
            if ch.names != kind.option_fields:
                v.append(f"template {t.id!r}: choice names {ch.names} differ from option fields {kind.option_fields}")
            undeclared = [n for n in ch.names if n not in declared]
            if undeclared:
                v.append(f"template {t.id!r}: option fields {undeclared} are not declared fields")
    elif isinstance(kind, SpanDistractor):
        if label_slots:
            v.append(f"template {t.id!r}: span_distractor must not contain {{{{label}}}}")
        if len(choices) != 1:
            v.append(f"template {t.id!r}: span_distractor needs exactly one choice placeholder, found {len(choices)}")
        else:
            ch = choices[0]
            if len(ch.names) != 2 or ch.names[1] != RESERVED_SPAN:
                v.append(f"template {t.id!r}: choice must be {{{{gold/{RESERVED_SPAN}}}}}, found {ch.names}")
            elif ch.names[0] != kind.gold_field:
                v.append(f"template {t.id!r}: choice gold {ch.names[0]!r} differs from kind gold_field {kind.gold_field!r}")
            if kind.gold_field not in declared:
                v.append(f"template {t.id!r}: gold field {kind.gold_field!r} is not a declared field")
    return v


def validate_example(schema: TaskSchema, example: Example) -> list[str]:
    """Check an example's gold against the schema's target space."""
    v: list[str] = []
    kinds = {type(t.kind) for t in schema.templates}
    if (LabelConditioned in kinds or LabelSlot in kinds) and example.gold not in schema.labels:
        v.append(f"{example.example_id}: gold {example.gold!r} not in labels")
    if OptionSlot in kinds:
        option_fields = set()
        for t in schema.templates:
            if isinstance(t.kind, OptionSlot):
                option_fields.update(t.kind.option_fields)
        if example.gold not in option_fields:
            v.append(f"{example.example_id}: gold {example.gold!r} is not an option field")
    if SpanDistractor in kinds and not example.gold:
        v.append(f"{example.example_id}: span task gold answer is empty")
    return v


# --- schema files ---

def _decode_template_text(raw: str) -> str:
    out = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c == "\\" and i + 1 < len(raw) and raw[i + 1] in ("n", "\\"):
            out.append("\n" if raw[i + 1] == "n" else "\\")
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


_TOP_KEYS = ("dataset_id", "category", "fields", "labels", "gold_field")
_TEMPLATE_KEYS = ("id", "family", "kind", "asserted_label", "text")


def parse_schema_text(text: str, source: str = "<string>") -> TaskSchema:
    """Parse a schema document. Raises SchemaFormatError on format problems."""
    top: dict[str, str] = {}
    raw_templates: list[dict[str, str]] = []
    block: dict[str, str] | None = None

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line == "template {":
            if block is not None:
                raise SchemaFormatError(f"{source}:{lineno}: template block inside template block")
            block = {}
            continue
        if line == "}":
            if block is None:
                raise SchemaFormatError(f"{source}:{lineno}: stray '}}'")
            raw_templates.append(block)
            block = None
            continue
        if ":" not in line:
            raise SchemaFormatError(f"{source}:{lineno}: expected 'key: value', got {line!r}")
        key, _, value = line.partition(":")
        key = key.strip()
        if value.startswith(" "):
            value = value[1:]
        if block is not None:
            if key not in _TEMPLATE_KEYS:
                raise SchemaFormatError(f"{source}:{lineno}: unknown template key {key!r}")
            if key in block:
                raise SchemaFormatError(f"{source}:{lineno}: duplicate template key {key!r}")
            block[key] = value if key == "text" else value.strip()
        else:
            if key not in _TOP_KEYS:
                raise SchemaFormatError(f"{source}:{lineno}: unknown key {key!r}")
            if key in top:
                raise SchemaFormatError(f"{source}:{lineno}: duplicate key {key!r}")
            top[key] = value.strip()

    if block is not None:
        raise SchemaFormatError(f"{source}: unclosed template block")
    for key in ("dataset_id", "category", "gold_field", "fields"):
        if key not in top:
            raise SchemaFormatError(f"{source}: missing {key!r}")

    fields = []
    if top["fields"]:
        for item in top["fields"].split(","):
            name, sep, ftype = item.partition(":")
            if not sep:
                raise SchemaFormatError(f"{source}: field entry {item.strip()!r} is not 'name: type'")
            fields.append(FieldSpec(name.strip(), ftype.strip()))
    labels = tuple(l.strip() for l in top.get("labels", "").split(",") if l.strip())
    declared = {f.name for f in fields}
    context_fields = [f.name for f in fields if f.type == "context"]
    context_field = context_fields[0] if len(context_fields) == 1 else None

    templates = []
    for raw in raw_templates:
        for key in ("id", "kind", "text"):
            if key not in raw:
                raise SchemaFormatError(f"{source}: template missing {key!r}: {raw}")
        if raw["kind"] not in KIND_NAMES:
            raise SchemaFormatError(f"{source}: unknown template kind {raw['kind']!r}")
        segments = parse_template(_decode_template_text(raw["text"]))
        choices = [s for s in segments if isinstance(s, Placeholder) and s.is_choice]
        kind: TemplateKind
        if raw["kind"] == "label_conditioned":
            if "asserted_label" not in raw:
                raise SchemaFormatError(f"{source}: label_conditioned template {raw['id']!r} missing asserted_label")
            kind = LabelConditioned(raw["asserted_label"])
        elif raw["kind"] == "label_slot":
            kind = LabelSlot()
        elif raw["kind"] == "option_slot":
            option_fields = choices[0].names if len(choices) == 1 else ()
            kind = OptionSlot(option_fields, top["gold_field"])
        else:
            gold = choices[0].names[0] if len(choices) == 1 and choices[0].names else ""
            kind = SpanDistractor(gold, context_field if gold and context_field in declared else context_field)
        templates.append(StatementTemplate(
            id=raw["id"],
            segments=segments,
            kind=kind,
            family=raw.get("family", raw["id"]),
        ))

    return TaskSchema(
        dataset_id=top["dataset_id"],
        category=top["category"],
        fields=tuple(fields),
        labels=labels,
        templates=tuple(templates),
        gold_field=top["gold_field"],
    )


def load_schema(path) -> TaskSchema:
    """Parse and validate a schema file. Violations raise SchemaFormatError."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    schema = parse_schema_text(text, source=str(path))
    violations = validate_schema(schema)
    if violations:
        raise SchemaFormatError(
            f"{path}: schema violates {len(violations)} invariant(s): " + "; ".join(violations),
            violations,
        )
    return schema


def schema_fingerprint(schema: TaskSchema) -> str:
    """Stable digest of schema content, used in artifact provenance."""
    doc = {
        "dataset_id": schema.dataset_id,
        "category": schema.category,
        "fields": [[f.name, f.type] for f in schema.fields],
        "labels": list(schema.labels),
        "gold_field": schema.gold_field,
        "templates": [
            [t.id, t.family, type(t.kind).__name__, getattr(t.kind, "asserted_label", ""), t.text]
            for t in schema.templates
        ],
    }
    blob = json.dumps(doc, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


# --- bundled schemas ---

def list_bundled_schemas() -> list[str]:
    root = resources.files("statementkit.data")
    return sorted(p.name[:-len(".schema")] for p in root.iterdir() if p.name.endswith(".schema"))


def load_bundled_schema(name: str) -> TaskSchema:
    root = resources.files("statementkit.data")
    candidate = root / f"{name}.schema"
    if not candidate.is_file():
        raise FileNotFoundError(f"no bundled schema named {name!r}")
    schema = parse_schema_text(candidate.read_text(encoding="utf-8"), source=f"bundled:{name}")
    violations = validate_schema(schema)
    if violations:
        raise SchemaFormatError(f"bundled:{name} is invalid: " + "; ".join(violations), violations)
    return schema
