"""Monthly summary-statistics report.

Rolls daily summaries into calendar-month rows (access counts, miss
traffic in TB, hit traffic in TB, net reduction %) plus Total and Daily
Average rows. Sizes are rendered in TB (10^12 bytes); percentages to
two decimals.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

from .errors import EmptyInput
from .metrics import DailySummary, net_traffic_reduction, rollup_monthly

TB = 10**12

REPORT_COLUMNS = ("period", "accesses", "transfer_tb", "shared_tb", "net_reduction_pct")


def _row(period: str, access_count: float, miss_size: float, hit_size: float) -> dict:
    access_size = hit_size + miss_size
    pct = 100.0 * hit_size / access_size if access_size else 0.0
    return {
        "period": period,
        "accesses": round(access_count, 2),
        "transfer_tb": round(miss_size / TB, 2),
        "shared_tb": round(hit_size / TB, 2),
        "net_reduction_pct": round(pct, 2),
    }


def build_report(summaries: Sequence[DailySummary]) -> list[dict]:
    """Monthly rows plus Total and Daily Average, from daily summaries.

    The Daily Average divides totals by the number of days having at
    least one access (gap days carry no information).
    """
    if not summaries:
        raise EmptyInput("report needs at least one summary")
    rows = []
    for month in rollup_monthly(summaries):
        pct = 100.0 * net_traffic_reduction(month)
        rows.append(
            {
                "period": month.date.strftime("%Y-%m"),
                "accesses": month.access_count,
                "transfer_tb": round(month.miss_size / TB, 2),
                "shared_tb": round(month.hit_size / TB, 2),
                "net_reduction_pct": round(pct, 2),
            }
        )
    total_access = sum(s.access_count for s in summaries)
    total_miss = sum(s.miss_size for s in summaries)
    total_hit = sum(s.hit_size for s in summaries)
    rows.append(_row("Total", total_access, total_miss, total_hit))
    active_days = sum(1 for s in summaries if s.access_count > 0)
    if active_days:
        rows.append(
            _row(
                "Daily Average",
                total_access / active_days,
                total_miss / active_days,
                total_hit / active_days,
            )
        )
    return rows


def emit_report(summaries: Sequence[DailySummary], path: Path | str, fmt: str = "json") -> None:
    """Write the monthly report as JSON (default) or CSV."""
    rows = build_report(summaries)
    path = Path(path)
    if fmt == "json":
        with path.open("w", encoding="utf-8") as f:
            json.dump({"rows": rows}, f, indent=2)
            f.write("\n")
    elif fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(REPORT_COLUMNS), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
