"""Daily forests, importance ranks, persistence periods and final ranks per stage."""
from __future__ import annotations

import csv
import datetime as dt
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import Stage, StudyCalendar
from .errors import DataError, DegenerateError
from .features import FEATURE_NAMES, FeatureMatrix
from .forest import (
    ForestParams,
    cross_val_f1,
    fit_forest,
    forest_importance,
    random_search,
)

REPORT_STAGES = (Stage.RESPONSE, Stage.RECOVERY)
DEFAULT_K = 2


@dataclass(frozen=True)
class TuningConfig:
    enabled: bool = False
    n_iter: int = 10
    k_folds: int = 3
    space: dict | None = None


@dataclass
class DailyModelResult:
    date: dt.date
    importance: np.ndarray
    f1_default: float | None
    f1_tuned: float | None
    params_used: ForestParams

    def to_dict(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "importance": [float(x) for x in self.importance],
            "f1_default": self.f1_default,
            "f1_tuned": self.f1_tuned,
            "params_used": self.params_used.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> DailyModelResult:
        return cls(dt.date.fromisoformat(d["date"]), np.array(d["importance"], dtype=float),
                   d["f1_default"], d["f1_tuned"], ForestParams.from_dict(d["params_used"]))


def day_seed(master_seed: int, date: dt.date) -> int:
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, date.toordinal()])
    return int(ss.generate_state(1, np.uint64)[0] >> 1)


def _aligned(matrix: FeatureMatrix, labels: dict[str, int]):
    missing = [z for z in matrix.zones if z not in labels]
    if missing:
        raise DataError(f"{matrix.date}: no label for zones {', '.join(missing[:10])}")
    y = np.array([labels[z] for z in matrix.zones], dtype=np.intp)
    return matrix.values, y


def run_daily_models(matrices: dict[dt.date, FeatureMatrix], labels: dict[str, int],
                     params: ForestParams, tuning: TuningConfig | None = None,
                     n_classes: int | None = None, evaluate: bool = True,
                     k_folds: int = 3, n_jobs: int = 1) -> list[DailyModelResult]:
    """One forest per date on that day's features against the static labels.

    ``params.seed`` is the master seed; each date gets its own derived seed.
    F1 values are stratified k-fold CV micro-F1 (the default-params fit and,
    when tuning is on, the best random-search score).
    """
    tuning = tuning or TuningConfig()
    if n_classes is None:
        n_classes = max(labels.values()) + 1
    results = []
    for date in sorted(matrices):
        X, y = _aligned(matrices[date], labels)
        seed = day_seed(params.seed, date)
        default = replace(params, seed=seed)
        f1_default = (cross_val_f1(X, y, default, k_folds, seed, n_classes, n_jobs)
                      if evaluate else None)
        used, f1_tuned = default, None
        if tuning.enabled:
            found = random_search(X, y, tuning.space, tuning.n_iter, tuning.k_folds, seed,
                                  base=default, n_classes=n_classes, n_jobs=n_jobs)
            used, f1_tuned = found.params, found.cv_score
        model = fit_forest(X, y, used, n_classes=n_classes, n_jobs=n_jobs)
        results.append(DailyModelResult(date, forest_importance(model), f1_default, f1_tuned, used))
    return results


def competition_rank(values, descending: bool = True) -> list[int]:
    """1-based ranks where exact ties share the smallest rank and the next ranks are skipped."""
    vals = list(values)
    if descending:
        return [1 + sum(1 for w in vals if w > v) for v in vals]
    return [1 + sum(1 for w in vals if w < v) for v in vals]


def rank_features(importance) -> list[int]:
    return competition_rank([float(x) for x in importance], descending=True)


def rank_series(results: list[DailyModelResult]) -> dict[dt.date, list[int]]:
    return {r.date: rank_features(r.importance) for r in results}


def persistence(ranks: list[int], k: int = DEFAULT_K) -> tuple[int, tuple[int, int]]:
    """Longest run of consecutive days whose day-to-day rank change is at most ``k``.

    Returns (run length, (min rank, max rank) within the run); the earliest run wins ties.
    """
    if not ranks:
        raise ValueError("stage has no dates")
    best_start, best_len = 0, 1
    start = 0
    for i in range(1, len(ranks)):
        if abs(ranks[i] - ranks[i - 1]) > k:
            start = i
        if i - start + 1 > best_len:
            best_start, best_len = start, i - start + 1
    run = ranks[best_start:best_start + best_len]
    return best_len, (min(run), max(run))


def final_ranks(series: dict[dt.date, list[int]], dates: list[dt.date]) -> list[int]:
    """Competition ranking of each feature's mean rank over ``dates``."""
    missing = [d for d in dates if d not in series]
    if missing:
        raise DegenerateError(f"no ranks for dates {missing[:3]}")
    # equal day counts, so comparing rank sums is comparing means, exactly
    sums = np.sum([series[d] for d in dates], axis=0)
    return competition_rank(sums.tolist(), descending=False)


@dataclass
class FeatureSummary:
    feature: str
    persistence_days: int
    rank_range: tuple[int, int]
    final_rank: int
    mean_rank: float

    def to_dict(self) -> dict:
        return {"feature": self.feature, "persistence_days": self.persistence_days,
                "rank_range": list(self.rank_range), "final_rank": self.final_rank,
                "mean_rank": self.mean_rank}

    @classmethod
    def from_dict(cls, d: dict) -> FeatureSummary:
        return cls(d["feature"], d["persistence_days"], tuple(d["rank_range"]),
                   d["final_rank"], d["mean_rank"])


def summarize(results: list[DailyModelResult], calendar: StudyCalendar,
              k: int = DEFAULT_K) -> dict[Stage, list[FeatureSummary]]:
    series = rank_series(results)
    out = {}
    for stage in REPORT_STAGES:
        dates = [d for d in calendar.stage_dates(stage) if d in series]
        if not dates:
            continue
        finals = final_ranks(series, dates)
        rows = []
        for j, name in enumerate(FEATURE_NAMES):
            ranks = [series[d][j] for d in dates]
            days, rng = persistence(ranks, k)
            rows.append(FeatureSummary(name, days, rng, finals[j], sum(ranks) / len(ranks)))
        out[stage] = rows
    return out


# --- reports -------------------------------------------------------------------

RANK_TABLE_COLUMNS = ("Feature", "PersistenceDays", "RankRangeMin", "RankRangeMax", "FinalRank")


@dataclass
class Report:
    measure: str
    n_classes: int
    persistence_k: int
    seed: int
    results: list[DailyModelResult]
    summaries: dict[Stage, list[FeatureSummary]]
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "n_classes": self.n_classes,
            "persistence_k": self.persistence_k,
            "seed": self.seed,
            "features": list(FEATURE_NAMES),
            "results": [r.to_dict() for r in self.results],
            "rank_series": {d.isoformat(): r for d, r in rank_series(self.results).items()},
            "summaries": {s.value: [f.to_dict() for f in rows] for s, rows in self.summaries.items()},
            **self.extra,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Report:
        known = {"measure", "n_classes", "persistence_k", "seed", "features", "results",
                 "rank_series", "summaries"}
        return cls(d["measure"], d["n_classes"], d["persistence_k"], d["seed"],
                   [DailyModelResult.from_dict(r) for r in d["results"]],
                   {Stage(s): [FeatureSummary.from_dict(f) for f in rows]
                    for s, rows in d["summaries"].items()},
                   {k: v for k, v in d.items() if k not in known})


def _csv(rows) -> str:
    buf = io.StringIO(newline="")
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def rank_table_csv(rows: list[FeatureSummary]) -> str:
    return _csv([RANK_TABLE_COLUMNS] + [
        (r.feature, r.persistence_days, r.rank_range[0], r.rank_range[1], r.final_rank)
        for r in rows])


def rank_series_csv(results: list[DailyModelResult]) -> str:
    series = rank_series(results)
    return _csv([("date", *FEATURE_NAMES)] + [(d.isoformat(), *series[d]) for d in sorted(series)])


def f1_series_csv(results: list[DailyModelResult]) -> str:
    tuned = any(r.f1_tuned is not None for r in results)
    header = ("date", "f1_default", "f1_tuned") if tuned else ("date", "f1_default")

    def fmt(x):
        return "" if x is None else repr(float(x))

    rows = [(r.date.isoformat(), fmt(r.f1_default), *((fmt(r.f1_tuned),) if tuned else ()))
            for r in results]
    return _csv([header] + rows)


def emit_report(report: Report, reports_dir) -> list[Path]:
    """Write reports/<measure>_<n>/{ranks_<stage>.csv, rank_series.csv, f1_series.csv, bundle.json}."""
    out = Path(reports_dir) / f"{report.measure}_{report.n_classes}"
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for stage, rows in report.summaries.items():
            written.append(_write(out / f"ranks_{stage.value}.csv", rank_table_csv(rows)))
        written.append(_write(out / "rank_series.csv", rank_series_csv(report.results)))
        written.append(_write(out / "f1_series.csv", f1_series_csv(report.results)))
        written.append(_write(out / "bundle.json",
                              json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"))
    except OSError as exc:
        raise DataError(f"cannot write report under {out}: {exc}") from exc
    return written


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8", newline="")
    return path


def load_bundle(path) -> Report:
    return Report.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
