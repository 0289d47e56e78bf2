"""Offline analytics over exported series: interval filters, per-day means.

Means use compensated summation (``math.fsum``), so the 1e-9 relative
agreement with a naive accumulation holds even on long, noisy series.
Day boundaries fall on multiples of ``day_length`` (virtual midnight);
empty days are omitted from the report.

Drives nothing and plots nothing; the CLI report path owns rendering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .service import TelemetryPoint, iso_to_virtual_ts

DAY_SECONDS = 86_400

CSV_HEADER = "timestamp,variable,value"


@dataclass(frozen=True)
class BadRow:
    line_number: int   # 1-based, header is line 1
    content: str
    reason: str


@dataclass
class ImportResult:
    points: list[TelemetryPoint] = field(default_factory=list)
    bad_rows: list[BadRow] = field(default_factory=list)


@dataclass(frozen=True)
class DayMean:
    day: int
    count: int
    mean: float


@dataclass
class DailyMeanReport:
    day_length: int
    days: list[DayMean] = field(default_factory=list)

    @property
    def overall_count(self) -> int:
        return sum(d.count for d in self.days)


class CsvFormatError(ValueError):
    """The input does not carry the expected export header."""


def import_csv(data: bytes | str) -> ImportResult:
    """Parse an export back into points.

    Accepts exactly the service's export format. Rows that do not parse
    are collected with their 1-based line numbers instead of aborting.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise CsvFormatError(
            f"missing header {CSV_HEADER!r}; got {lines[0]!r}" if lines
            else "empty input")

    result = ImportResult()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            result.bad_rows.append(BadRow(lineno, line, "expected 3 fields"))
            continue
        ts_text, variable, value_text = parts
        try:
            ts = iso_to_virtual_ts(ts_text)
        except ValueError:
            result.bad_rows.append(BadRow(lineno, line, "bad timestamp"))
            continue
        try:
            value = float(value_text)
        except ValueError:
            result.bad_rows.append(BadRow(lineno, line, "bad value"))
            continue
        if not math.isfinite(value):
            result.bad_rows.append(BadRow(lineno, line, "non-finite value"))
            continue
        result.points.append(TelemetryPoint(variable, ts, value))
    return result


def filter_interval(points: list[TelemetryPoint], t1: float,
                    t2: float) -> list[TelemetryPoint]:
    """Subset with t1 <= ts <= t2, original order preserved."""
    if t1 > t2:
        raise ValueError(f"interval start {t1} is after end {t2}")
    return [p for p in points if t1 <= p.ts <= t2]


def daily_mean(points: list[TelemetryPoint],
               day_length: int = DAY_SECONDS) -> DailyMeanReport:
    """Bucket by floor(ts / day_length) and average each bucket."""
    if day_length <= 0:
        raise ValueError(f"day_length must be positive, got {day_length}")
    buckets: dict[int, list[float]] = {}
    for p in points:
        buckets.setdefault(p.ts // day_length, []).append(p.value)
    days = [
        DayMean(day=day, count=len(values), mean=math.fsum(values) / len(values))
        for day, values in sorted(buckets.items())
    ]
    return DailyMeanReport(day_length=day_length, days=days)


def report_table(report: DailyMeanReport) -> str:
    """Aligned text table for terminal output."""
    lines = [
        f"daily means (day length {report.day_length} s)",
        f"{'day':>6} {'count':>8} {'mean':>12}",
    ]
    for d in report.days:
        lines.append(f"{d.day:>6} {d.count:>8} {d.mean:>12.4f}")
    lines.append(f"{'total':>6} {report.overall_count:>8}")
    return "\n".join(lines)


def report_csv(report: DailyMeanReport) -> str:
    """Delimited form of the report for downstream tooling."""
    lines = ["day,count,mean"]
    lines.extend(f"{d.day},{d.count},{d.mean:.6f}" for d in report.days)
    return "\n".join(lines) + "\n"
