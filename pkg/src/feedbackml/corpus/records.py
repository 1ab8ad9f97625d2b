"""Feedback records and CSV / JSONL ingestion."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Mapping

from ..errors import DataError


class FeedbackType(str, Enum):
    COMMENT = "comment"
    COMPLAINT = "complaint"
    CRITICISM = "criticism"
    REQUEST = "request"
    COMPLIMENT = "compliment"

    @classmethod
    def parse(cls, value: str) -> "FeedbackType":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"unknown feedback type {value!r}") from None


@dataclass(frozen=True)
class FeedbackRecord:
    id: str
    text: str
    feedback_type: FeedbackType
    agency: str
    received_at: str | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("empty text")
        if not isinstance(self.feedback_type, FeedbackType):
            raise ValueError(f"unknown feedback type {self.feedback_type!r}")


@dataclass(frozen=True)
class Reject:
    row: int
    reason: str

    def to_json(self) -> str:
        return json.dumps({"row": self.row, "reason": self.reason}, ensure_ascii=False)


DEFAULT_SCHEMA = {"id": "id", "text": "text", "type": "type", "agency": "agency", "received_at": None}
_REQUIRED = ("text", "type")


def _read_utf8(path: Path) -> str:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: invalid UTF-8 at byte offset {exc.start}") from None
    return text.removeprefix("\ufeff")


def _check_timestamp(value: str | None) -> str | None:
    if value is None or not value.strip():
        return None
    value = value.strip()
    datetime.fromisoformat(value.replace("Z", "+00:00"))
    return value


def _make_record(row_no: int, fields: Mapping[str, str | None]) -> FeedbackRecord:
    return FeedbackRecord(
        id=(fields.get("id") or str(row_no)).strip(),
        text=fields.get("text") or "",
        feedback_type=FeedbackType.parse(fields.get("type") or ""),
        agency=(fields.get("agency") or "").strip(),
        received_at=_check_timestamp(fields.get("received_at")),
    )


def _resolve_schema(schema: Mapping[str, str | None] | None) -> dict[str, str | None]:
    merged = dict(DEFAULT_SCHEMA)
    if schema:
        unknown = set(schema) - set(DEFAULT_SCHEMA)
        if unknown:
            raise DataError(f"unknown schema fields: {sorted(unknown)}")
        merged.update(schema)
    for field in _REQUIRED:
        if not merged.get(field):
            raise DataError(f"schema must map the {field!r} field to a column")
    return merged


def ingest_csv(path, schema: Mapping[str, str | None] | None = None
               ) -> tuple[list[FeedbackRecord], list[Reject]]:
    """Parse a CSV export with a header row.

    ``schema`` maps record fields (id, text, type, agency, received_at) to
    column names; a field mapped to ``None`` is not read. Rows that fail
    validation are returned as rejects with their 1-based data row number.
    """
    mapping = _resolve_schema(schema)
    reader = csv.reader(io.StringIO(_read_utf8(path), newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{path}: empty file, expected a header row") from None
    header = [h.strip() for h in header]
    positions = {}
    for field, column in mapping.items():
        if column is None:
            continue
        if column not in header:
            raise DataError(f"{path}: mapped column {column!r} (for {field}) not in header {header}")
        positions[field] = header.index(column)

    records, rejects = [], []
    for row_no, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != len(header):
            rejects.append(Reject(row_no, f"expected {len(header)} fields, found {len(row)}"))
            continue
        try:
            records.append(_make_record(row_no, {f: row[i] for f, i in positions.items()}))
        except ValueError as exc:
            rejects.append(Reject(row_no, str(exc)))
    return records, rejects


def ingest_jsonl(path, schema: Mapping[str, str | None] | None = None
                 ) -> tuple[list[FeedbackRecord], list[Reject]]:
    """Parse one JSON object per line (keys id/text/type/agency by default)."""
    mapping = _resolve_schema(schema)
    records, rejects = [], []
    for row_no, line in enumerate(_read_utf8(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            rejects.append(Reject(row_no, f"malformed JSON: {exc.msg}"))
            continue
        if not isinstance(obj, dict):
            rejects.append(Reject(row_no, "line is not a JSON object"))
            continue
        fields = {}
        for field, key in mapping.items():
            if key is None:
                continue
            value = obj.get(key)
            fields[field] = None if value is None else str(value)
        try:
            records.append(_make_record(row_no, fields))
        except ValueError as exc:
            rejects.append(Reject(row_no, str(exc)))
    return records, rejects


def ingest(path, schema=None, fmt: str = "auto"):
    """Dispatch on ``fmt`` ('csv', 'jsonl', or 'auto' by file suffix)."""
    if fmt == "auto":
        fmt = "jsonl" if Path(path).suffix.lower() in (".jsonl", ".ndjson", ".json") else "csv"
    if fmt == "csv":
        return ingest_csv(path, schema)
    if fmt == "jsonl":
        return ingest_jsonl(path, schema)
    raise DataError(f"unknown input format {fmt!r}")


def write_rejects(path, rejects) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in rejects:
            fh.write(r.to_json() + "\n")


def read_texts(path, id_field: str = "id", text_field: str = "text", fmt: str = "auto"
               ) -> tuple[list[tuple[str, str]], list[Reject]]:
    """Unlabelled ``(id, text)`` pairs from CSV or JSONL, for inference.

    Rows without text are rejected; a missing id falls back to the row number.
    """
    if fmt == "auto":
        fmt = "jsonl" if Path(path).suffix.lower() in (".jsonl", ".ndjson", ".json") else "csv"
    content = _read_utf8(path)
    if fmt == "csv":
        reader = csv.DictReader(io.StringIO(content, newline=""))
        if reader.fieldnames is None or text_field not in [f.strip() for f in reader.fieldnames]:
            raise DataError(f"{path}: no {text_field!r} column")
        rows = ({k.strip(): v for k, v in r.items() if k is not None} for r in reader)
    elif fmt == "jsonl":
        rows = []
        for line in content.splitlines():
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                obj = {"__error__": f"malformed JSON: {exc.msg}"}
            rows.append(obj if isinstance(obj, dict) else {"__error__": "line is not a JSON object"})
    else:
        raise DataError(f"unknown input format {fmt!r}")
    items, rejects = [], []
    for row_no, row in enumerate(rows, start=1):
        if "__error__" in row:
            rejects.append(Reject(row_no, row["__error__"]))
            continue
        text = row.get(text_field)
        if text is None or not str(text).strip():
            rejects.append(Reject(row_no, "empty text"))
            continue
        ident = row.get(id_field)
        items.append((str(ident).strip() if ident not in (None, "") else str(row_no), str(text)))
    return items, rejects
