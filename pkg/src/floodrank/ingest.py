"""CSV parsing, validation and aggregation of the four activity sources to zone-day series."""
from __future__ import annotations

import csv
import datetime as dt
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable

from .core import SourceKind, ZoneDayKey, ZoneId
from .errors import DataError, IngestErrors, RowError, SchemaError
from .sentiment import Polarity

log = logging.getLogger(__name__)

CONGESTION_RATIO = 0.5


@dataclass(frozen=True)
class TileActivityRecord:
    tile_id: str
    timestamp: dt.datetime
    activity: float


@dataclass(frozen=True)
class RoadObservation:
    segment_id: str
    zone: ZoneId
    interval_start: dt.datetime
    avg_speed: float
    speed_limit: float


@dataclass(frozen=True)
class CardTxDailyRecord:
    zone: ZoneId
    date: dt.date
    n_cards: int
    n_transactions: int
    total_spent: float


@dataclass(frozen=True)
class PostRecord:
    post_id: str
    zone: ZoneId
    timestamp: dt.datetime
    text: str


# --- field converters --------------------------------------------------------

def _token(value: str) -> str:
    if value == "":
        raise ValueError("empty value")
    return value


def _timestamp(value: str) -> dt.datetime:
    # timezone-free: an offset, if present, is dropped after reading local wall time
    ts = dt.datetime.fromisoformat(value.replace("Z", "+00:00"))
    return ts.replace(tzinfo=None)


def _date(value: str) -> dt.date:
    return dt.date.fromisoformat(value)


def _real(value: str) -> float:
    x = float(value)
    if not math.isfinite(x):
        raise ValueError("not finite")
    return x


def _nonneg_real(value: str) -> float:
    x = _real(value)
    if x < 0:
        raise ValueError("must be >= 0")
    return x


def _pos_real(value: str) -> float:
    x = _real(value)
    if x <= 0:
        raise ValueError("must be > 0")
    return x


def _nonneg_int(value: str) -> int:
    x = int(value)
    if x < 0:
        raise ValueError("must be >= 0")
    return x


def _pos_int(value: str) -> int:
    x = int(value)
    if x <= 0:
        raise ValueError("must be > 0")
    return x


def _grid_timestamp(value: str) -> dt.datetime:
    ts = _timestamp(value)
    if ts.minute % 5 or ts.second or ts.microsecond:
        raise ValueError("interval_start must lie on the 5-minute grid")
    return ts


def _inundation(value: str) -> float:
    x = _nonneg_real(value)
    if x > 100:
        raise ValueError("must be <= 100")
    return x


@dataclass(frozen=True)
class _Schema:
    columns: tuple[str, ...]
    converters: tuple[Callable[[str], object], ...]
    build: Callable[..., object]


@dataclass(frozen=True)
class ZoneValue:
    zone: ZoneId
    value: float


@dataclass(frozen=True)
class TileZone:
    tile_id: str
    zone: ZoneId


SCHEMAS: dict[str, _Schema] = {
    "activity": _Schema(("tile_id", "timestamp", "activity"),
                        (_token, _timestamp, _nonneg_real), TileActivityRecord),
    "traffic": _Schema(("segment_id", "zone", "interval_start", "avg_speed", "speed_limit"),
                       (_token, _token, _grid_timestamp, _nonneg_real, _pos_real), RoadObservation),
    "transactions": _Schema(("zone", "date", "n_cards", "n_transactions", "total_spent"),
                            (_token, _date, _nonneg_int, _nonneg_int, _nonneg_real),
                            CardTxDailyRecord),
    "posts": _Schema(("post_id", "zone", "timestamp", "text"),
                     (_token, _token, _timestamp, str), PostRecord),
    "tile_zone_map": _Schema(("tile_id", "zone"), (_token, _token), TileZone),
    "claims": _Schema(("zone", "n_claims"), (_token, _nonneg_int), ZoneValue),
    "population": _Schema(("zone", "population"), (_token, _pos_int), ZoneValue),
    "inundation": _Schema(("zone", "inundation_pct"), (_token, _inundation), ZoneValue),
}

FILENAMES = {
    "activity": "activity.csv",
    "tile_zone_map": "tile_zone_map.csv",
    "traffic": "traffic.csv",
    "transactions": "transactions.csv",
    "posts": "posts.csv",
    "claims": "claims.csv",
    "population": "population.csv",
    "inundation": "inundation.csv",
}


def parse_source(kind, stream, source: str | None = None) -> list:
    """Parse one CSV source into records.

    ``stream`` may be bytes, str, or a binary/text file object. Every bad row
    is reported (with its 1-based line number and column) in a single
    :class:`IngestErrors`; nothing is dropped.
    """
    kind = kind.value if isinstance(kind, SourceKind) else str(kind)
    if kind not in SCHEMAS:
        raise SchemaError(f"unknown source kind {kind!r}")
    schema = SCHEMAS[kind]
    source = source or FILENAMES[kind]
    if isinstance(stream, (bytes, bytearray)):
        text = bytes(stream).decode("utf-8-sig")
    elif isinstance(stream, str):
        text = stream
    else:
        raw = stream.read()
        text = raw.decode("utf-8-sig") if isinstance(raw, bytes) else raw

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError(f"{source}: file is empty (missing header)") from None
    header = [h.strip() for h in header]
    if tuple(header) != schema.columns:
        raise SchemaError(
            f"{source}: header {','.join(header)!r} does not match {','.join(schema.columns)!r}"
        )

    records, errors = [], []
    ncol = len(schema.columns)
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != ncol:
            errors.append(RowError(f"expected {ncol} fields, got {len(row)}", line, source=source))
            continue
        values = []
        for col, conv, cell in zip(schema.columns, schema.converters, row):
            try:
                values.append(conv(cell))
            except ValueError as exc:
                errors.append(RowError(f"{cell!r}: {exc}", line, col, source=source))
                break
        else:
            records.append(schema.build(*values))
    if errors:
        raise IngestErrors(errors)
    return records


def read_source(kind, path) -> list:
    path = Path(path)
    return parse_source(kind, path.read_bytes(), source=str(path))


def _fmt(value) -> str:
    if isinstance(value, dt.datetime):
        return value.isoformat(timespec="seconds")
    if isinstance(value, dt.date):
        return value.isoformat()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_source(kind, records: Iterable) -> str:
    """Canonical CSV text for records; ``parse_source`` of the result reproduces them."""
    kind = kind.value if isinstance(kind, SourceKind) else str(kind)
    schema = SCHEMAS[kind]
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(schema.columns)
    for rec in records:
        w.writerow([_fmt(getattr(rec, f.name)) for f in fields(rec)])
    return buf.getvalue()


def tile_zone_map(records: Iterable[TileZone]) -> dict[str, ZoneId]:
    out: dict[str, ZoneId] = {}
    for r in records:
        if out.get(r.tile_id, r.zone) != r.zone:
            raise DataError(f"tile {r.tile_id!r} mapped to more than one zone")
        out[r.tile_id] = r.zone
    return out


# --- zone-day series ---------------------------------------------------------

QUANTITIES = (
    "activity_index",
    "max_congestion_pct",
    "mean_congestion_pct",
    "n_cards",
    "n_transactions",
    "total_spent",
    "avg_sentiment",
    "n_pos",
    "n_neu",
    "n_neg",
)

QUANTITY_SOURCE = {
    "activity_index": SourceKind.ACTIVITY,
    "max_congestion_pct": SourceKind.TRAFFIC,
    "mean_congestion_pct": SourceKind.TRAFFIC,
    "n_cards": SourceKind.TRANSACTIONS,
    "n_transactions": SourceKind.TRANSACTIONS,
    "total_spent": SourceKind.TRANSACTIONS,
    "avg_sentiment": SourceKind.POSTS,
    "n_pos": SourceKind.POSTS,
    "n_neu": SourceKind.POSTS,
    "n_neg": SourceKind.POSTS,
}


@dataclass
class ZoneDaySeries:
    """Per-quantity maps from ZoneDayKey to value. A missing key means missing data."""

    values: dict[str, dict[ZoneDayKey, float]] = field(
        default_factory=lambda: {q: {} for q in QUANTITIES})

    def get(self, quantity: str, zone: ZoneId, date: dt.date) -> float | None:
        return self.values[quantity].get(ZoneDayKey(zone, date))

    def zones(self) -> list[ZoneId]:
        return sorted({k.zone for m in self.values.values() for k in m})

    def update(self, other: dict[str, dict[ZoneDayKey, float]]) -> ZoneDaySeries:
        for q, m in other.items():
            if q not in self.values:
                raise KeyError(q)
            self.values[q].update(m)
        return self

    def __eq__(self, other):
        return isinstance(other, ZoneDaySeries) and self.values == other.values


def aggregate_activity(records: Iterable[TileActivityRecord],
                       zone_map: dict[str, ZoneId]) -> dict[str, dict[ZoneDayKey, float]]:
    records = list(records)
    unmapped = sorted({r.tile_id for r in records if r.tile_id not in zone_map})
    if unmapped:
        raise DataError(f"tiles without a zone mapping: {', '.join(unmapped)}")
    tile_day: dict[tuple[str, dt.date], list[float]] = defaultdict(list)
    for r in records:
        tile_day[(r.tile_id, r.timestamp.date())].append(r.activity)
    zone_day: dict[ZoneDayKey, list[float]] = defaultdict(list)
    for (tile, day), samples in sorted(tile_day.items()):
        zone_day[ZoneDayKey(zone_map[tile], day)].append(math.fsum(samples) / len(samples))
    return {"activity_index": {k: math.fsum(v) / len(v) for k, v in sorted(zone_day.items())}}


def aggregate_congestion(records: Iterable[RoadObservation]) -> dict[str, dict[ZoneDayKey, float]]:
    # (zone, period) -> [congested, observed]
    periods: dict[tuple[ZoneId, dt.datetime], list[int]] = defaultdict(lambda: [0, 0])
    for r in records:
        if not r.speed_limit > 0:
            raise DataError(f"segment {r.segment_id!r}: speed_limit must be > 0")
        slot = periods[(r.zone, r.interval_start)]
        slot[0] += r.avg_speed / r.speed_limit < CONGESTION_RATIO
        slot[1] += 1
    by_day: dict[ZoneDayKey, list[float]] = defaultdict(list)
    for (zone, start), (congested, observed) in sorted(periods.items()):
        by_day[ZoneDayKey(zone, start.date())].append(100.0 * congested / observed)
    return {
        "max_congestion_pct": {k: max(v) for k, v in by_day.items()},
        "mean_congestion_pct": {k: math.fsum(v) / len(v) for k, v in by_day.items()},
    }


def aggregate_transactions(records: Iterable[CardTxDailyRecord]) -> dict[str, dict[ZoneDayKey, float]]:
    totals: dict[ZoneDayKey, list[float]] = {}
    for r in sorted(records, key=lambda r: (r.zone, r.date, r.n_cards, r.n_transactions, r.total_spent)):
        key = ZoneDayKey(r.zone, r.date)
        if key in totals:
            log.warning("duplicate transaction row for %s on %s; summing", r.zone, r.date)
            t = totals[key]
            t[0] += r.n_cards
            t[1] += r.n_transactions
            t[2] += r.total_spent
        else:
            totals[key] = [r.n_cards, r.n_transactions, r.total_spent]
    return {
        "n_cards": {k: float(v[0]) for k, v in totals.items()},
        "n_transactions": {k: float(v[1]) for k, v in totals.items()},
        "total_spent": {k: float(v[2]) for k, v in totals.items()},
    }


def aggregate_posts(records: Iterable[PostRecord], scorer) -> dict[str, dict[ZoneDayKey, float]]:
    """``scorer(text) -> (compound, Polarity)``; zone-days without posts stay missing."""
    scores: dict[ZoneDayKey, list[float]] = defaultdict(list)
    counts: dict[ZoneDayKey, dict[Polarity, int]] = defaultdict(lambda: dict.fromkeys(Polarity, 0))
    for r in sorted(records, key=lambda r: (r.zone, r.timestamp, r.post_id)):
        key = ZoneDayKey(r.zone, r.timestamp.date())
        compound, polarity = scorer(r.text)
        scores[key].append(compound)
        counts[key][polarity] += 1
    return {
        "avg_sentiment": {k: math.fsum(v) / len(v) for k, v in scores.items()},
        "n_pos": {k: float(c[Polarity.POSITIVE]) for k, c in counts.items()},
        "n_neu": {k: float(c[Polarity.NEUTRAL]) for k, c in counts.items()},
        "n_neg": {k: float(c[Polarity.NEGATIVE]) for k, c in counts.items()},
    }


def build_series(activity, zone_map, traffic, transactions, posts, scorer) -> ZoneDaySeries:
    series = ZoneDaySeries()
    series.update(aggregate_activity(activity, zone_map))
    series.update(aggregate_congestion(traffic))
    series.update(aggregate_transactions(transactions))
    series.update(aggregate_posts(posts, scorer))
    return series
