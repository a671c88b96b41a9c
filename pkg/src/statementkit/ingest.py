"""Dataset file ingestion.

Two carrier formats:
  delimited        header row + one record per row (comma or tab separated)
  record-per-line  one JSON object per line

field_map maps schema field names to source column/key names; the reserved
entry "gold" locates the gold answer and the optional "example_id" locates a
stable id (row order index otherwise). Malformed rows go to a rejects report
instead of failing the run, until they exceed max(1, 1% of rows).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Mapping

from .errors import FileUnreadable, RejectThresholdExceeded, StatementKitError
from .schema import Example, TaskSchema, validate_example

FORMATS = ("delimited", "record-per-line")


@dataclass
class IngestResult:
    examples: list[Example]
    rejects: list[dict] = field(default_factory=list)
    threshold: int = 1

    @property
    def total_rows(self) -> int:
        return len(self.examples) + len(self.rejects)


def _read_rows(path, format: str) -> list[dict]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            if format == "delimited":
                sample = fh.read(4096)
                fh.seek(0)
                delimiter = "\t" if "\t" in sample.splitlines()[0] else "," if sample else ","
                return [dict(r) for r in csv.DictReader(fh, delimiter=delimiter)]
            rows = []
            for i, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    rows.append(obj if isinstance(obj, dict) else {"__bad__": "not an object"})
                except json.JSONDecodeError as exc:
                    rows.append({"__bad__": f"line {i + 1}: {exc.msg}"})
            return rows
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise FileUnreadable(f"{path}: not valid UTF-8 ({exc.reason})") from exc


def ingest(path, format: str, field_map: Mapping[str, str], schema: TaskSchema | None = None) -> IngestResult:
    """Examples in file order plus a rejects report.

    With a schema, each example's gold is also checked against the schema's
    target space and failures are rejected rather than raised.
    """
    if format not in FORMATS:
        raise StatementKitError(f"unknown ingest format {format!r}; expected one of {FORMATS}")
    if "gold" not in field_map:
        raise StatementKitError("field_map must map 'gold' to a source column")

    rows = _read_rows(path, format)
    id_col = field_map.get("example_id")
    value_cols = {k: v for k, v in field_map.items() if k not in ("gold", "example_id")}

    examples: list[Example] = []
    rejects: list[dict] = []
    for i, row in enumerate(rows):
        if "__bad__" in row:
            rejects.append({"row": i, "reason": row["__bad__"]})
            continue
        missing = [src for src in list(value_cols.values()) + [field_map["gold"]]
                   if row.get(src) in (None, "")]
        if missing:
            rejects.append({"row": i, "reason": f"missing column(s): {', '.join(sorted(missing))}"})
            continue
        example = Example(
            example_id=str(row[id_col]) if id_col and row.get(id_col) else f"r{i:06d}",
            values={name: str(row[src]) for name, src in value_cols.items()},
            gold=str(row[field_map["gold"]]),
        )
        if schema is not None:
            problems = validate_example(schema, example)
            if problems:
                rejects.append({"row": i, "reason": "; ".join(problems)})
                continue
        examples.append(example)

    threshold = max(1, len(rows) // 100)
    if len(rejects) > threshold:
        raise RejectThresholdExceeded(
            f"{path}: {len(rejects)} of {len(rows)} rows rejected "
            f"(threshold {threshold}); first: {rejects[0]['reason']}"
        )
    return IngestResult(examples=examples, rejects=rejects, threshold=threshold)
