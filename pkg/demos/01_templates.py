#!/usr/bin/env python3
"""
Template DSL basics
===================

Parse template strings, look at the four template kinds, and render
statements by hand before any generation machinery gets involved.
"""

from statementkit import schema as sc

# a template is literal text with {{placeholder}} slots
segments = sc.parse_template("{{question1}} and {{question2}} ask the same thing.")
for seg in segments:
    detail = seg.text if isinstance(seg, sc.Literal) else "|".join(seg.names)
    print(type(seg).__name__, "->", repr(detail))

# round trip: segments serialize back to the original string
print(sc.serialize_segments(segments))

# bundled schemas ship with the package
print(sorted(sc.list_bundled_schemas()))

qqp = sc.load_bundled_schema("qqp")
print(qqp.dataset_id, qqp.category, qqp.labels)
for t in qqp.templates:
    print(f"  [{t.family}] {type(t.kind).__name__}: {t.text}")

# rendering fills slots from an example's field values
example = sc.Example("demo-0", {
    "text1": "How do magnets work",
    "text2": "What makes magnets attract",
}, gold="duplicate")
print(sc.render(qqp.templates[0], example))

# label-slot templates take a binding for the open {{label}} slot
tweets = sc.load_bundled_schema("tweet_offensive")
ls = [t for t in tweets.templates if isinstance(t.kind, sc.LabelSlot)]
ex = sc.Example("demo-1", {"text": "have a nice day"}, gold="non-offensive")
for label in tweets.labels:
    print(label, "->", sc.render(ls[0], ex, binding=label))

# schemas validate structurally; an undeclared field is a hard error
problems = sc.validate_schema(qqp)
print("validation problems:", problems or "none")
