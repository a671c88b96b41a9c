"""statementkit: train a binary truth discriminator on verbalized NLP tasks.

The pipeline: task schemas declare statement templates; statement generation
verbalizes labeled examples into true/false statements; balanced multitask
mixtures feed a hashed n-gram logistic scorer; unseen classification tasks are
solved zero-shot by scoring one statement per candidate label and few-shot by
continued training on statements expanded from a handful of examples.
"""

from .errors import *  # noqa: F401,F403
from .schema import (  # noqa: F401
    Example,
    FieldSpec,
    LabelConditioned,
    LabelSlot,
    Literal,
    OptionSlot,
    Placeholder,
    SpanDistractor,
    StatementTemplate,
    TaskSchema,
    TASK_CATEGORIES,
    list_bundled_schemas,
    load_bundled_schema,
    load_schema,
    parse_template,
    render,
    serialize_segments,
    validate_schema,
)

__version__ = "0.1.0"
