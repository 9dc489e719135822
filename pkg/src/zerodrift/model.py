"""Prediction records, label sets and log ingestion (JSONL / CSV)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Mapping, Optional, Sequence, Union

PROB_SUM_TOL = 1e-6
CSV_COLUMNS = ("timestamp", "predicted_label", "confidence", "true_label", "text")


class DriftError(Exception):
    """Base class for package errors."""


class RecordValidationError(DriftError, ValueError):
    """A record violates one of the record invariants."""

    code = "invalid_record"


class ConfidenceRangeError(RecordValidationError):
    code = "confidence_out_of_range"


class ProbabilityRangeError(RecordValidationError):
    code = "probability_out_of_range"


class ProbabilitySumError(RecordValidationError):
    code = "probabilities_do_not_sum_to_1"


class ArgmaxMismatchError(RecordValidationError):
    code = "label_argmax_mismatch"


class UnknownLabelError(RecordValidationError):
    code = "unknown_label"


class EmbeddingDimensionError(RecordValidationError):
    code = "embedding_dimension_mismatch"


class ParseError(DriftError, ValueError):
    """Malformed input; ``line`` is 1-based (the CSV header is line 1)."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        self.reason = message
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class LabelSet:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(lab) for lab in self.labels)
        if len(labels) < 2:
            raise ValueError("label set needs at least 2 labels")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels}")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label) -> bool:
        return label in self.labels

    def __iter__(self):
        return iter(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class PredictionRecord:
    """One inference event. ``timestamp`` is UTC seconds since the epoch."""

    timestamp: int
    predicted_label: str
    confidence: float
    class_probs: Optional[Mapping[str, float]] = None
    true_label: Optional[str] = None
    embedding: Optional[tuple[float, ...]] = None
    text: Optional[str] = None
    source_id: Optional[str] = None


@dataclass(frozen=True)
class Dataset:
    records: tuple[PredictionRecord, ...]
    label_set: LabelSet
    name: str = "dataset"
    embedding_dim: Optional[int] = field(default=None)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def time_span(self) -> tuple[int, int]:
        return self.records[0].timestamp, self.records[-1].timestamp

    @property
    def metadata(self) -> dict:
        start, end = self.time_span
        return {
            "name": self.name,
            "record_count": len(self.records),
            "start": format_timestamp(start),
            "end": format_timestamp(end),
        }


def parse_timestamp(value: str) -> int:
    """RFC 3339 string to UTC epoch seconds (fractional seconds truncated).

    A missing offset is read as UTC.
    """
    if not isinstance(value, str) or not value:
        raise ValueError(f"timestamp must be a non-empty string, got {value!r}")
    text = value.strip()
    if text[-1] in "zZ":
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text.replace(" ", "T", 1))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return math.floor(dt.timestamp())


def format_timestamp(seconds: int) -> str:
    return datetime.fromtimestamp(seconds, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def validate_record(record: PredictionRecord, label_set: LabelSet) -> PredictionRecord:
    """Return ``record`` unchanged if it satisfies every record invariant."""
    conf = record.confidence
    if not (isinstance(conf, (int, float)) and math.isfinite(conf) and 0.0 < conf <= 1.0):
        raise ConfidenceRangeError(f"confidence {conf!r} outside (0, 1]")
    if record.predicted_label not in label_set:
        raise UnknownLabelError(f"unknown label {record.predicted_label!r}")
    if record.true_label is not None and record.true_label not in label_set:
        raise UnknownLabelError(f"unknown label {record.true_label!r}")
    if record.class_probs is not None:
        probs = record.class_probs
        for lab, p in probs.items():
            if lab not in label_set:
                raise UnknownLabelError(f"unknown label {lab!r} in class_probs")
            if not (math.isfinite(p) and 0.0 <= p <= 1.0):
                raise ProbabilityRangeError(f"probability {p!r} for {lab!r} outside [0, 1]")
        if abs(math.fsum(probs.values()) - 1.0) > PROB_SUM_TOL:
            raise ProbabilitySumError("probabilities do not sum to 1")
        top = max(probs.values())
        if probs.get(record.predicted_label, -1.0) < top:
            raise ArgmaxMismatchError("label/argmax mismatch")
    if record.embedding is not None:
        if not record.embedding or not all(math.isfinite(v) for v in record.embedding):
            raise RecordValidationError("embedding must be a non-empty finite vector")
    return record


def _opt_str(value) -> Optional[str]:
    if value is None or value == "":
        return None
    return str(value)


def _record_from_mapping(obj: Mapping) -> PredictionRecord:
    for key in ("timestamp", "predicted_label", "confidence"):
        if key not in obj or obj[key] is None or obj[key] == "":
            raise ValueError(f"missing required field {key!r}")
    conf = obj["confidence"]
    if isinstance(conf, bool):
        raise ValueError("confidence must be a number")
    conf = float(conf)
    probs = obj.get("class_probs")
    if probs is not None:
        if not isinstance(probs, Mapping):
            raise ValueError("class_probs must be an object")
        probs = {str(k): float(v) for k, v in probs.items()}
    emb = obj.get("embedding")
    if emb is not None:
        if not isinstance(emb, (list, tuple)):
            raise ValueError("embedding must be an array")
        emb = tuple(float(v) for v in emb)
    return PredictionRecord(
        timestamp=parse_timestamp(obj["timestamp"]),
        predicted_label=str(obj["predicted_label"]),
        confidence=conf,
        class_probs=probs,
        true_label=_opt_str(obj.get("true_label")),
        embedding=emb,
        text=_opt_str(obj.get("text")),
        source_id=_opt_str(obj.get("source_id")),
    )


def _iter_jsonl(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", lineno)
        yield lineno, obj


def _iter_csv(text: str):
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None:
        return
    unknown = [c for c in reader.fieldnames if c not in CSV_COLUMNS]
    if unknown:
        raise ParseError(f"unknown CSV columns {unknown}", 1)
    for row in reader:
        if None in row:
            raise ParseError("too many fields", reader.line_num)
        yield reader.line_num, row


def parse_records(
    source: Union[bytes, str, IO],
    format: str,
    label_set: LabelSet,
    name: str = "dataset",
) -> Dataset:
    """Parse a prediction log into a time-sorted, validated :class:`Dataset`.

    Args:
        source: raw bytes, already-decoded text, or a binary/text stream.
        format: ``"jsonl"`` or ``"csv"``.
        label_set: labels every record must come from.
        name: dataset name carried into reports.

    Raises:
        ParseError: undecodable input, malformed line (with line number) or
            no records at all.
        RecordValidationError: a record breaks an invariant; the message is
            prefixed with the offending line number.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8 ({exc.reason})") from None
    if source.startswith("\ufeff"):
        source = source[1:]
    if format == "jsonl":
        rows = _iter_jsonl(source)
    elif format == "csv":
        rows = _iter_csv(source)
    else:
        raise ValueError(f"unknown format {format!r}; expected 'jsonl' or 'csv'")

    records = []
    dim = None
    for lineno, obj in rows:
        try:
            rec = _record_from_mapping(obj)
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), lineno) from None
        try:
            validate_record(rec, label_set)
            if rec.embedding is not None:
                if dim is None:
                    dim = len(rec.embedding)
                elif len(rec.embedding) != dim:
                    raise EmbeddingDimensionError(
                        f"embedding dimension {len(rec.embedding)} != {dim}"
                    )
        except RecordValidationError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
        records.append(rec)
    if not records:
        raise ParseError("no records")
    return make_dataset(records, label_set, name=name)


def make_dataset(
    records: Iterable[PredictionRecord], label_set: LabelSet, name: str = "dataset"
) -> Dataset:
    """Validate and sort already-built records (stable on equal timestamps)."""
    records = list(records)
    if not records:
        raise ParseError("no records")
    dim = None
    for rec in records:
        validate_record(rec, label_set)
        if rec.embedding is not None:
            if dim is None:
                dim = len(rec.embedding)
            elif len(rec.embedding) != dim:
                raise EmbeddingDimensionError(f"embedding dimension {len(rec.embedding)} != {dim}")
    ordered = tuple(sorted(records, key=lambda r: r.timestamp))
    return Dataset(records=ordered, label_set=label_set, name=name, embedding_dim=dim)


def record_to_dict(rec: PredictionRecord) -> dict:
    """Canonical JSON-ready mapping; absent optional fields are omitted."""
    out = {
        "timestamp": format_timestamp(rec.timestamp),
        "predicted_label": rec.predicted_label,
        "confidence": rec.confidence,
    }
    if rec.class_probs is not None:
        out["class_probs"] = {k: rec.class_probs[k] for k in sorted(rec.class_probs)}
    if rec.true_label is not None:
        out["true_label"] = rec.true_label
    if rec.embedding is not None:
        out["embedding"] = list(rec.embedding)
    if rec.text is not None:
        out["text"] = rec.text
    if rec.source_id is not None:
        out["source_id"] = rec.source_id
    return out


def serialize_records(dataset: Union[Dataset, Sequence[PredictionRecord]], format: str = "jsonl") -> bytes:
    """Write records in canonical form (field order fixed, UTF-8)."""
    records = dataset.records if isinstance(dataset, Dataset) else dataset
    if format == "jsonl":
        lines = [json.dumps(record_to_dict(r), ensure_ascii=False) for r in records]
        return ("\n".join(lines) + "\n").encode("utf-8")
    if format == "csv":
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    format_timestamp(r.timestamp),
                    r.predicted_label,
                    repr(float(r.confidence)),
                    r.true_label or "",
                    r.text or "",
                ]
            )
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unknown format {format!r}; expected 'jsonl' or 'csv'")
