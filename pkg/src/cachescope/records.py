"""Access-record schema plus trace parsing and serialization.

A trace is a sequence of monitored cache accesses, one record per line,
in either CSV (canonical column order, header required) or JSON-lines
form. Both formats are accepted by every consumer in the package.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, asdict
from datetime import date, datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .errors import MalformedLine, SchemaViolation

CSV_COLUMNS = (
    "ts_start",
    "ts_end",
    "user_id",
    "file_id",
    "file_path",
    "file_size",
    "transfer_size",
    "kind",
    "node_id",
    "success",
)


class AccessKind(Enum):
    """Whether an access was served locally (hit) or fetched upstream (miss)."""

    HIT = "hit"
    MISS = "miss"


@dataclass(frozen=True)
class AccessRecord:
    """One monitored cache access: the atom every metric is built from.

    Timestamps are integer epoch-seconds UTC. Sizes are exact integer
    bytes. ``transfer_size`` is the bytes actually moved: served bytes
    for a hit, fetched bytes for a miss.
    """

    ts_start: int
    ts_end: int
    user_id: str
    file_id: str
    file_path: str
    file_size: int
    transfer_size: int
    kind: AccessKind
    node_id: str
    success: bool

    def __post_init__(self) -> None:
        if self.ts_end < self.ts_start:
            raise SchemaViolation(
                f"ts_end {self.ts_end} precedes ts_start {self.ts_start}"
            )
        if not 0 <= self.transfer_size <= self.file_size:
            raise SchemaViolation(
                f"transfer_size {self.transfer_size} outside [0, file_size={self.file_size}]"
            )
        if self.kind is AccessKind.MISS and self.success and self.transfer_size <= 0:
            raise SchemaViolation("successful miss must transfer at least one byte")

    @property
    def day(self) -> date:
        """UTC calendar day of the access start."""
        return datetime.fromtimestamp(self.ts_start, tz=timezone.utc).date()


@dataclass(frozen=True)
class FileRequest:
    """A client's request for a file, before the federation routes it."""

    time: int
    user_id: str
    file_id: str
    file_size: int
    request_size: int
    namespace: str

    def __post_init__(self) -> None:
        if self.request_size <= 0:
            raise SchemaViolation("request_size must be positive")
        if self.request_size > self.file_size:
            raise SchemaViolation(
                f"request_size {self.request_size} exceeds file_size {self.file_size}"
            )


def _with_line(err: Exception, line_no: Optional[int]) -> Exception:
    if line_no is None:
        return err
    return type(err)(f"line {line_no}: {err}")


def parse_record(line: str, fmt: str = "csv", line_no: Optional[int] = None) -> AccessRecord:
    """Parse one trace line in the given format ("csv" or "jsonl").

    Raises MalformedLine when the line cannot be parsed and
    SchemaViolation when it parses but breaks a record invariant;
    both carry ``line_no`` context when provided.
    """
    if fmt == "csv":
        try:
            row = next(csv.reader([line]))
        except (csv.Error, StopIteration) as exc:
            raise _with_line(MalformedLine(f"unparseable csv: {exc}"), line_no) from exc
        return _record_from_row(row, line_no)
    if fmt == "jsonl":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise _with_line(MalformedLine(f"unparseable json: {exc}"), line_no) from exc
        if not isinstance(obj, dict):
            raise _with_line(MalformedLine("json line is not an object"), line_no)
        return _record_from_obj(obj, line_no)
    raise ValueError(f"unknown trace format {fmt!r}")


def _record_from_row(row: list[str], line_no: Optional[int]) -> AccessRecord:
    if len(row) != len(CSV_COLUMNS):
        raise _with_line(
            MalformedLine(f"expected {len(CSV_COLUMNS)} fields, got {len(row)}"), line_no
        )
    obj = dict(zip(CSV_COLUMNS, row))
    return _record_from_obj(obj, line_no)


def _record_from_obj(obj: dict, line_no: Optional[int]) -> AccessRecord:
    try:
        kind_raw = obj["kind"]
        success_raw = obj["success"]
        kwargs = dict(
            ts_start=int(obj["ts_start"]),
            ts_end=int(obj["ts_end"]),
            user_id=str(obj["user_id"]),
            file_id=str(obj["file_id"]),
            file_path=str(obj["file_path"]),
            file_size=int(obj["file_size"]),
            transfer_size=int(obj["transfer_size"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise _with_line(MalformedLine(f"bad field: {exc}"), line_no) from exc

    if isinstance(kind_raw, str) and kind_raw.lower() in ("hit", "miss"):
        kind = AccessKind(kind_raw.lower())
    else:
        raise _with_line(MalformedLine(f"kind must be hit or miss, got {kind_raw!r}"), line_no)

    if isinstance(success_raw, bool):
        success = success_raw
    elif isinstance(success_raw, str) and success_raw.lower() in ("true", "false"):
        success = success_raw.lower() == "true"
    else:
        raise _with_line(
            MalformedLine(f"success must be true or false, got {success_raw!r}"), line_no
        )

    try:
        return AccessRecord(
            kind=kind, node_id=str(obj["node_id"]), success=success, **kwargs
        )
    except KeyError as exc:
        raise _with_line(MalformedLine(f"bad field: {exc}"), line_no) from exc
    except SchemaViolation as exc:
        raise _with_line(exc, line_no) from exc


def serialize_record(record: AccessRecord, fmt: str = "csv") -> str:
    """Render one record as a single line (no trailing newline)."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            [
                record.ts_start,
                record.ts_end,
                record.user_id,
                record.file_id,
                record.file_path,
                record.file_size,
                record.transfer_size,
                record.kind.value,
                record.node_id,
                "true" if record.success else "false",
            ]
        )
        return buf.getvalue().rstrip("\n")
    if fmt == "jsonl":
        obj = asdict(record)
        obj["kind"] = record.kind.value
        return json.dumps(obj, separators=(",", ":"))
    raise ValueError(f"unknown trace format {fmt!r}")


def trace_format_for_path(path: Path | str) -> str:
    """Pick csv/jsonl from a file suffix (.jsonl/.json -> jsonl, else csv)."""
    suffix = Path(path).suffix.lower()
    return "jsonl" if suffix in (".jsonl", ".json") else "csv"


def read_trace(path: Path | str, fmt: Optional[str] = None) -> list[AccessRecord]:
    """Read a whole trace file, validating every record."""
    path = Path(path)
    fmt = fmt or trace_format_for_path(path)
    records: list[AccessRecord] = []
    with path.open("r", encoding="utf-8", newline="") as f:
        if fmt == "csv":
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration:
                raise MalformedLine(f"{path}: empty trace file, header required") from None
            if tuple(header) != CSV_COLUMNS:
                raise MalformedLine(
                    f"{path}: line 1: bad header {header!r}, expected {','.join(CSV_COLUMNS)}"
                )
            for idx, row in enumerate(reader, start=2):
                if not row:
                    continue
                records.append(_record_from_row(row, idx))
        elif fmt == "jsonl":
            for idx, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                records.append(parse_record(line, "jsonl", idx))
        else:
            raise ValueError(f"unknown trace format {fmt!r}")
    return records


def write_trace(
    path: Path | str, records: Iterable[AccessRecord], fmt: Optional[str] = None
) -> None:
    """Write records to a trace file in the canonical layout."""
    path = Path(path)
    fmt = fmt or trace_format_for_path(path)
    with path.open("w", encoding="utf-8", newline="") as f:
        if fmt == "csv":
            f.write(",".join(CSV_COLUMNS) + "\n")
        for record in records:
            f.write(serialize_record(record, fmt) + "\n")


def iter_days(records: Iterable[AccessRecord]) -> Iterator[date]:
    """Distinct UTC days present in a trace, in first-seen order."""
    seen = set()
    for record in records:
        d = record.day
        if d not in seen:
            seen.add(d)
            yield d
