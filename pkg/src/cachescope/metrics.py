"""Cache-utilization analytics over access traces.

Aggregates records into daily or ISO-week summaries (per node or
federation-wide), computes the derived traffic metrics, the same-day
reuse statistics, and trailing moving averages. Sizes stay exact
integer bytes; ratios go to double precision only at the reporting
boundary. Failed records (success=false) are excluded everywhere.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, fields
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import EmptyInput, MixedDays, SchemaViolation, ZeroWindow
from .records import AccessKind, AccessRecord

ALL_SCOPE = "ALL"

SUMMARY_COLUMNS = (
    "date",
    "scope",
    "access_count",
    "access_size",
    "hit_count",
    "hit_size",
    "miss_count",
    "miss_size",
    "reuse_count",
    "reuse_size",
    "unique_reused_files",
)

COUNT_SIZE_FIELDS = SUMMARY_COLUMNS[2:]

DERIVED_COLUMNS = (
    "net_traffic_reduction",
    "traffic_demand_reduction_rate",
    "average_access_size",
    "reuse_rate",
    "reuse_size_rate",
)


@dataclass(frozen=True)
class DailySummary:
    """Additive per-period aggregate of one scope's accesses.

    ``date`` is the UTC calendar day (for week periods, the ISO week's
    Monday; for monthly rollups, the first of the month). ``scope`` is a
    node_id or "ALL".
    """

    date: date
    scope: str
    access_count: int = 0
    access_size: int = 0
    hit_count: int = 0
    hit_size: int = 0
    miss_count: int = 0
    miss_size: int = 0
    reuse_count: int = 0
    reuse_size: int = 0
    unique_reused_files: int = 0

    def __post_init__(self) -> None:
        if self.access_count != self.hit_count + self.miss_count:
            raise SchemaViolation("access_count != hit_count + miss_count")
        if self.access_size != self.hit_size + self.miss_size:
            raise SchemaViolation("access_size != hit_size + miss_size")
        if self.reuse_count > self.hit_count:
            raise SchemaViolation("reuse_count exceeds hit_count")
        if self.reuse_size > self.hit_size:
            raise SchemaViolation("reuse_size exceeds hit_size")
        if self.unique_reused_files > self.reuse_count:
            raise SchemaViolation("unique_reused_files exceeds reuse_count")
        if (self.unique_reused_files == 0) != (self.reuse_count == 0):
            raise SchemaViolation("unique_reused_files and reuse_count must be 0 together")


@dataclass(frozen=True)
class ReuseStats:
    """Same-day reuse counters for one scope."""

    reuse_count: int
    reuse_size: int
    unique_reused_files: int

    @property
    def reuse_rate(self) -> float:
        if self.unique_reused_files == 0:
            return 0.0
        return self.reuse_count / self.unique_reused_files

    @property
    def reuse_size_rate(self) -> float:
        if self.unique_reused_files == 0:
            return 0.0
        return self.reuse_size / self.unique_reused_files


def _metric_records(
    records: Iterable[AccessRecord], scope: str
) -> list[tuple[int, AccessRecord]]:
    """Successful records in scope, tagged with their input position."""
    return [
        (idx, r)
        for idx, r in enumerate(records)
        if r.success and (scope == ALL_SCOPE or r.node_id == scope)
    ]


def _reuse_for_file(entries: list[tuple[int, AccessRecord]]) -> tuple[int, int]:
    """(reuse events, reused bytes) for one cached file's one-day records.

    Accesses are ordered by (ts_start, ts_end, input position); each
    maximal run of k consecutive hits contributes k-1 reuse events, the
    2nd..kth hit of the run counting its transfer_size as reused bytes.
    A miss on the file breaks the run.
    """
    entries = sorted(entries, key=lambda e: (e[1].ts_start, e[1].ts_end, e[0]))
    count = 0
    size = 0
    run = 0
    for _, rec in entries:
        if rec.kind is AccessKind.HIT:
            run += 1
            if run >= 2:
                count += 1
                size += rec.transfer_size
        else:
            run = 0
    return count, size


def _day_reuse(tagged: list[tuple[int, AccessRecord]]) -> ReuseStats:
    # Runs are grouped per (file, node): on any single-residency trace a
    # hit run never spans nodes, and this grouping makes every reuse
    # field sum exactly across node scopes to the ALL scope.
    by_cache: dict[tuple[str, str], list[tuple[int, AccessRecord]]] = {}
    for idx, rec in tagged:
        by_cache.setdefault((rec.file_id, rec.node_id), []).append((idx, rec))
    total_count = 0
    total_size = 0
    unique = 0
    for entries in by_cache.values():
        c, s = _reuse_for_file(entries)
        if c > 0:
            unique += 1
            total_count += c
            total_size += s
    return ReuseStats(total_count, total_size, unique)


def reuse_metrics(records: Sequence[AccessRecord], scope: str = ALL_SCOPE) -> ReuseStats:
    """Reuse statistics for records that must all fall on one UTC day."""
    tagged = _metric_records(records, scope)
    days = {rec.day for _, rec in tagged}
    if len(days) > 1:
        raise MixedDays(f"records span {len(days)} days: {sorted(days)}")
    return _day_reuse(tagged)


def _iso_monday(d: date) -> date:
    return d - timedelta(days=d.weekday())


def aggregate(
    records: Iterable[AccessRecord], period: str = "day", scope: str = ALL_SCOPE
) -> list[DailySummary]:
    """Aggregate a trace into per-period summaries with zero-filled gaps.

    ``period`` is "day" or "week" (ISO weeks, keyed by their Monday).
    Reuse is always computed within single UTC days and summed into
    weeks. An empty trace aggregates to an empty list.
    """
    if period not in ("day", "week"):
        raise ValueError(f"period must be day or week, got {period!r}")
    tagged = _metric_records(records, scope)
    if not tagged:
        return []

    by_day: dict[date, list[tuple[int, AccessRecord]]] = {}
    for idx, rec in tagged:
        by_day.setdefault(rec.day, []).append((idx, rec))

    daily: dict[date, DailySummary] = {}
    for day, entries in by_day.items():
        hit_count = hit_size = miss_count = miss_size = 0
        for _, rec in entries:
            if rec.kind is AccessKind.HIT:
                hit_count += 1
                hit_size += rec.transfer_size
            else:
                miss_count += 1
                miss_size += rec.transfer_size
        reuse = _day_reuse(entries)
        daily[day] = DailySummary(
            date=day,
            scope=scope,
            access_count=hit_count + miss_count,
            access_size=hit_size + miss_size,
            hit_count=hit_count,
            hit_size=hit_size,
            miss_count=miss_count,
            miss_size=miss_size,
            reuse_count=reuse.reuse_count,
            reuse_size=reuse.reuse_size,
            unique_reused_files=reuse.unique_reused_files,
        )

    if period == "day":
        first, last = min(daily), max(daily)
        out = []
        d = first
        while d <= last:
            out.append(daily.get(d, DailySummary(date=d, scope=scope)))
            d += timedelta(days=1)
        return out

    weekly: dict[date, list[DailySummary]] = {}
    for day, summary in daily.items():
        weekly.setdefault(_iso_monday(day), []).append(summary)
    first, last = min(weekly), max(weekly)
    out = []
    monday = first
    while monday <= last:
        members = weekly.get(monday)
        if members:
            out.append(_sum_summaries(members, monday, scope))
        else:
            out.append(DailySummary(date=monday, scope=scope))
        monday += timedelta(days=7)
    return out


def _sum_summaries(members: Sequence[DailySummary], when: date, scope: str) -> DailySummary:
    totals = {name: sum(getattr(s, name) for s in members) for name in COUNT_SIZE_FIELDS}
    return DailySummary(date=when, scope=scope, **totals)


def rollup_monthly(summaries: Sequence[DailySummary]) -> list[DailySummary]:
    """Sum daily summaries over calendar months (dated at the month's first)."""
    if not summaries:
        return []
    scope = summaries[0].scope
    months: dict[date, list[DailySummary]] = {}
    for s in summaries:
        months.setdefault(s.date.replace(day=1), []).append(s)
    return [_sum_summaries(members, first, scope) for first, members in sorted(months.items())]


def net_traffic_reduction(s: DailySummary) -> float:
    """Fraction of accessed bytes absorbed by the cache: hit_size / access_size."""
    if s.access_size == 0:
        return 0.0
    return s.hit_size / s.access_size


def traffic_demand_reduction_rate(s: DailySummary) -> float:
    """Accessed bytes over transferred (miss) bytes; the WAN-traffic saving factor.

    With zero misses the rate is +inf when anything was served and NaN
    when nothing was accessed at all.
    """
    if s.miss_size == 0:
        return math.inf if s.hit_size > 0 else math.nan
    return s.access_size / s.miss_size


def average_access_size(s: DailySummary) -> float:
    """Mean bytes per access; 0 for an empty period."""
    if s.access_count == 0:
        return 0.0
    return s.access_size / s.access_count


def reuse_rate(s: DailySummary) -> float:
    if s.unique_reused_files == 0:
        return 0.0
    return s.reuse_count / s.unique_reused_files


def reuse_size_rate(s: DailySummary) -> float:
    if s.unique_reused_files == 0:
        return 0.0
    return s.reuse_size / s.unique_reused_files


def derived_metrics(s: DailySummary) -> dict[str, float]:
    return {
        "net_traffic_reduction": net_traffic_reduction(s),
        "traffic_demand_reduction_rate": traffic_demand_reduction_rate(s),
        "average_access_size": average_access_size(s),
        "reuse_rate": reuse_rate(s),
        "reuse_size_rate": reuse_size_rate(s),
    }


def moving_average(
    series: Sequence[float], window: int, skip: Optional[Sequence[bool]] = None
) -> np.ndarray:
    """Trailing moving average, windows truncated at the start.

    output[i] = mean(series[max(0, i-window+1) .. i]). With ``skip``,
    flagged entries are left out of both numerator and denominator
    (gap days); a window with nothing left averages to 0.
    """
    if window < 1:
        raise ZeroWindow(f"window must be >= 1, got {window}")
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if n == 0:
        return x.copy()
    if skip is None:
        csum = np.concatenate(([0.0], np.cumsum(x)))
        out = np.empty(n)
        for i in range(n):
            lo = max(0, i - window + 1)
            out[i] = (csum[i + 1] - csum[lo]) / (i + 1 - lo)
        return out
    keep = ~np.asarray(skip, dtype=bool)
    vsum = np.concatenate(([0.0], np.cumsum(np.where(keep, x, 0.0))))
    ksum = np.concatenate(([0], np.cumsum(keep.astype(np.int64))))
    out = np.empty(n)
    for i in range(n):
        lo = max(0, i - window + 1)
        k = ksum[i + 1] - ksum[lo]
        out[i] = (vsum[i + 1] - vsum[lo]) / k if k else 0.0
    return out


def is_gap(s: DailySummary) -> bool:
    """A gap period has no accesses at all."""
    return s.access_count == 0


def node_ids(records: Iterable[AccessRecord]) -> list[str]:
    """Distinct node ids appearing in a trace, sorted."""
    return sorted({r.node_id for r in records})


def _summary_row(
    s: DailySummary, derived: bool, ma: Optional[dict[str, np.ndarray]], idx: int
) -> dict:
    row: dict = {"date": s.date.isoformat(), "scope": s.scope}
    for name in COUNT_SIZE_FIELDS:
        row[name] = getattr(s, name)
    if derived:
        row.update(derived_metrics(s))
    if ma:
        for col, values in ma.items():
            row[col] = float(values[idx])
    return row


def summary_rows(
    summaries: Sequence[DailySummary],
    derived: bool = True,
    ma_window: int = 0,
    skip_gaps: bool = False,
) -> list[dict]:
    """Summaries as flat dict rows, optionally with derived and MA columns."""
    ma: Optional[dict[str, np.ndarray]] = None
    if ma_window > 1:
        skip = [is_gap(s) for s in summaries] if skip_gaps else None
        ma = {}
        feature_fields = SUMMARY_COLUMNS[2:10]
        for name in feature_fields:
            values = [getattr(s, name) for s in summaries]
            ma[f"{name}_ma{ma_window}"] = moving_average(values, ma_window, skip)
        rates = [traffic_demand_reduction_rate(s) for s in summaries]
        finite = [r if math.isfinite(r) else 0.0 for r in rates]
        ma[f"traffic_demand_reduction_rate_ma{ma_window}"] = moving_average(
            finite, ma_window, skip
        )
    return [_summary_row(s, derived, ma, i) for i, s in enumerate(summaries)]


def write_summaries(
    path: Path | str,
    summaries: Sequence[DailySummary],
    fmt: str = "csv",
    derived: bool = True,
    ma_window: int = 0,
    skip_gaps: bool = False,
) -> None:
    """Write summaries (and derived metric columns) as CSV or JSON."""
    rows = summary_rows(summaries, derived, ma_window, skip_gaps)
    path = Path(path)
    if fmt == "csv":
        header = list(rows[0].keys()) if rows else list(SUMMARY_COLUMNS)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=header, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    elif fmt == "json":
        with path.open("w", encoding="utf-8") as f:
            json.dump(rows, f, indent=2, allow_nan=True)
            f.write("\n")
    else:
        raise ValueError(f"unknown summary format {fmt!r}")


def read_summaries(path: Path | str, scope: Optional[str] = None) -> list[DailySummary]:
    """Read summaries back from CSV or JSON, ignoring derived columns."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        with path.open("r", encoding="utf-8") as f:
            rows = json.load(f)
    else:
        with path.open("r", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
    if not rows:
        raise EmptyInput(f"{path}: no summary rows")
    out = []
    for row in rows:
        if scope is not None and row["scope"] != scope:
            continue
        out.append(
            DailySummary(
                date=date.fromisoformat(row["date"]),
                scope=row["scope"],
                **{name: int(row[name]) for name in COUNT_SIZE_FIELDS},
            )
        )
    if not out:
        raise EmptyInput(f"{path}: no rows with scope {scope!r}")
    return out


def summary_field_names() -> tuple[str, ...]:
    return tuple(f.name for f in fields(DailySummary))
