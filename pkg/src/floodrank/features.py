"""Baselines over the normal window and the ten percent-deviation features FE1..FE10."""
from __future__ import annotations

import csv
import datetime as dt
import io
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import StudyCalendar, ZoneDayKey, ZoneId, baseline_window, date_range
from .errors import ConfigError, DegenerateError
from .ingest import QUANTITIES, QUANTITY_SOURCE, ZoneDaySeries

N_FEATURES = 10
FEATURE_NAMES = tuple(f"FE{i}" for i in range(1, N_FEATURES + 1))
FEATURE_DESCRIPTIONS = (
    "Variations in the average daily activity index",
    "Variations in the daily maximum percentage of congested roads",
    "Changes in the daily average percentage of congested roads",
    "Variations in the number of cards",
    "Changes in the number of transactions",
    "Changes in the total spent",
    "Variations in the average sentiment score",
    "Changes in the number of positive posts",
    "Changes in the number of neutral posts",
    "Changes in the number of negative posts",
)
# FE order follows QUANTITIES order one-to-one
FEATURE_QUANTITY = dict(zip(FEATURE_NAMES, QUANTITIES))

IMPUTE_POLICIES = ("median", "zero", "drop")


def pct_deviation(baseline: float | None, value: float | None) -> float | None:
    """(baseline - value) / baseline * 100, evaluated in that order; None when undefined."""
    if baseline is None or value is None or baseline == 0:
        return None
    out = (baseline - value) / baseline * 100.0
    return out if math.isfinite(out) else None


def fe_activity(baseline, day_value):
    return pct_deviation(baseline, day_value)


def fe_congestion(base_max, base_mean, day_max, day_mean):
    return pct_deviation(base_max, day_max), pct_deviation(base_mean, day_mean)


def fe_transactions(base_cards, base_tx, base_spent, day_cards, day_tx, day_spent):
    return (pct_deviation(base_cards, day_cards),
            pct_deviation(base_tx, day_tx),
            pct_deviation(base_spent, day_spent))


def fe_twitter(base_avg, base_pos, base_neu, base_neg, day_avg, day_pos, day_neu, day_neg):
    return (pct_deviation(base_avg, day_avg),
            pct_deviation(base_pos, day_pos),
            pct_deviation(base_neu, day_neu),
            pct_deviation(base_neg, day_neg))


@dataclass
class ZoneBaselines:
    """zone -> quantity -> mean over that quantity's baseline window (absent if no data)."""

    means: dict[ZoneId, dict[str, float]]

    def get(self, zone: ZoneId, quantity: str) -> float | None:
        return self.means.get(zone, {}).get(quantity)


def compute_baselines(series: ZoneDaySeries, calendar: StudyCalendar) -> ZoneBaselines:
    means: dict[ZoneId, dict[str, float]] = {z: {} for z in series.zones()}
    for q in QUANTITIES:
        lo, hi = baseline_window(calendar, QUANTITY_SOURCE[q])
        acc: dict[ZoneId, list[float]] = {}
        for key, v in series.values[q].items():
            if lo <= key.date <= hi:
                acc.setdefault(key.zone, []).append(v)
        for zone, vals in acc.items():
            means[zone][q] = math.fsum(vals) / len(vals)
    return ZoneBaselines(means)


@dataclass(frozen=True)
class FeatureRow:
    key: ZoneDayKey
    fe: tuple[float, ...]
    present: tuple[bool, ...]


def feature_row(series: ZoneDaySeries, baselines: ZoneBaselines, zone: ZoneId,
                date: dt.date) -> FeatureRow:
    fe, present = [], []
    for name in FEATURE_NAMES:
        q = FEATURE_QUANTITY[name]
        v = pct_deviation(baselines.get(zone, q), series.get(q, zone, date))
        fe.append(float("nan") if v is None else v)
        present.append(v is not None)
    return FeatureRow(ZoneDayKey(zone, date), tuple(fe), tuple(present))


@dataclass
class FeatureMatrix:
    date: dt.date
    zones: list[ZoneId]
    values: np.ndarray                      # (n_zones, 10), complete
    imputed: np.ndarray                     # bool mask, same shape
    imputation_log: list[tuple[ZoneId, str, float]] = field(default_factory=list)
    dropped: list[ZoneId] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["zone", *(n.lower() for n in FEATURE_NAMES), "imputed_mask"])
        for zone, row, mask in zip(self.zones, self.values, self.imputed):
            w.writerow([zone, *(repr(float(x)) for x in row), "".join("1" if m else "0" for m in mask)])
        return buf.getvalue()


def assemble_matrix(rows: list[FeatureRow], policy: str = "median") -> FeatureMatrix:
    if policy not in IMPUTE_POLICIES:
        raise ConfigError(f"unknown imputation policy {policy!r}")
    if not rows:
        raise DegenerateError("no feature rows to assemble")
    dates = {r.key.date for r in rows}
    if len(dates) != 1:
        raise ValueError("rows must share one date")
    date = dates.pop()
    rows = sorted(rows, key=lambda r: r.key.zone)
    zones = [r.key.zone for r in rows]
    values = np.array([r.fe for r in rows], dtype=float)
    present = np.array([r.present for r in rows], dtype=bool)
    missing = ~present
    log: list[tuple[ZoneId, str, float]] = []

    if policy == "drop":
        keep = present.all(axis=1)
        dropped = [z for z, k in zip(zones, keep) if not k]
        if not keep.any():
            raise DegenerateError(f"every zone has a missing feature on {date}; nothing left after drop")
        return FeatureMatrix(date, [z for z, k in zip(zones, keep) if k], values[keep],
                             np.zeros((int(keep.sum()), N_FEATURES), dtype=bool), [], dropped)

    for j, name in enumerate(FEATURE_NAMES):
        if not missing[:, j].any():
            continue
        if policy == "median":
            col = values[present[:, j], j]
            if col.size == 0:
                raise DegenerateError(f"feature {name} is missing for every zone on {date}")
            fill = float(statistics.median(col.tolist()))
        else:
            fill = 0.0
        for i in np.flatnonzero(missing[:, j]):
            values[i, j] = fill
            log.append((zones[i], name, fill))
    return FeatureMatrix(date, zones, values, missing, log)


def build_matrices(series: ZoneDaySeries, calendar: StudyCalendar, policy: str = "median",
                   zones: list[ZoneId] | None = None,
                   dates: list[dt.date] | None = None) -> dict[dt.date, FeatureMatrix]:
    baselines = compute_baselines(series, calendar)
    zones = sorted(zones) if zones is not None else series.zones()
    dates = dates if dates is not None else calendar.flood_dates()
    return {d: assemble_matrix([feature_row(series, baselines, z, d) for z in zones], policy)
            for d in dates}


def read_matrix_csv(path) -> FeatureMatrix:
    path = Path(path)
    date = dt.date.fromisoformat(path.stem.removeprefix("features_"))
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))[1:]
    zones = [r[0] for r in rows]
    values = np.array([[float(x) for x in r[1:11]] for r in rows], dtype=float).reshape(-1, N_FEATURES)
    imputed = np.array([[c == "1" for c in r[11]] for r in rows], dtype=bool).reshape(-1, N_FEATURES)
    return FeatureMatrix(date, zones, values, imputed)


__all__ = [
    "FEATURE_NAMES", "FeatureMatrix", "FeatureRow", "ZoneBaselines", "assemble_matrix",
    "build_matrices", "compute_baselines", "date_range", "fe_activity", "fe_congestion",
    "fe_transactions", "fe_twitter", "feature_row", "pct_deviation",
]
