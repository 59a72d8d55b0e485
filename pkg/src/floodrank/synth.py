"""Synthetic raw datasets with a planted per-zone severity, for end-to-end recovery checks.

Each zone gets a severity in [0, 1]. On flood days every channel's level is its
zone baseline scaled by ``1 -/+ effect * severity * profile(t)`` plus noise,
where ``profile`` ramps up over the response stage and decays over recovery.
Impacts (claims, inundation) are monotone in severity.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .core import StudyCalendar
from .errors import ConfigError

CHANNELS = ("activity", "congestion", "transactions", "posts")

_FILLER = ("heading", "downtown", "now", "the", "street", "update", "near", "water", "level",
           "houston", "today", "traffic", "check", "bayou", "road", "news", "at", "on", "this")
_POSITIVE = ("good", "great", "safe", "thanks", "happy", "hope", "grateful", "relief", "glad",
             "strong", "support", "rescued", "blessed", "kind", "lucky")
_NEGATIVE = ("bad", "terrible", "flooded", "damage", "destroyed", "scared", "worried", "stuck",
             "trapped", "sad", "disaster", "danger", "outage", "panic", "awful", "worst")


@dataclass(frozen=True)
class ScenarioConfig:
    n_zones: int = 142
    tiles_per_zone: int = 3
    segments_per_zone: int = 3
    samples_per_day: int = 6            # activity samples, every 24/samples hours
    periods_per_day: int = 24           # observed 5-minute periods per day (<= 288)
    calendar: StudyCalendar = field(default_factory=StudyCalendar.harvey)
    effect_size: dict = field(default_factory=lambda: dict.fromkeys(CHANNELS, 0.5))
    noise_sd: dict = field(default_factory=lambda: dict.fromkeys(CHANNELS, 0.05))
    posts_per_day: tuple[float, float] = (3.0, 10.0)
    claims_rate: float = 0.05           # claims per capita at severity 1
    zero_inundation_fraction: float = 0.2
    recovery_floor: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.n_zones < 4:
            raise ConfigError("n_zones must be >= 4")
        for name in ("tiles_per_zone", "segments_per_zone", "samples_per_day", "periods_per_day"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.periods_per_day > 288:
            raise ConfigError("periods_per_day cannot exceed 288")
        if 24 % self.samples_per_day:
            raise ConfigError("samples_per_day must divide 24")
        for table in ("effect_size", "noise_sd"):
            d = getattr(self, table)
            unknown = set(d) - set(CHANNELS)
            if unknown:
                raise ConfigError(f"{table}: unknown channels {sorted(unknown)}")
            full = {c: float(d.get(c, 0.0)) for c in CHANNELS}
            if not all(math.isfinite(v) for v in full.values()):
                raise ConfigError(f"{table} values must be finite")
            object.__setattr__(self, table, full)
        if any(v < 0 for v in self.noise_sd.values()):
            raise ConfigError("noise_sd values must be >= 0")
        if not 0 <= self.zero_inundation_fraction < 1:
            raise ConfigError("zero_inundation_fraction must be in [0, 1)")

    @classmethod
    def from_dict(cls, data: dict) -> ScenarioConfig:
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown synth keys {sorted(unknown)}")
        if "calendar" in data and isinstance(data["calendar"], dict):
            data["calendar"] = StudyCalendar.from_dict(data["calendar"])
        if "posts_per_day" in data:
            data["posts_per_day"] = tuple(data["posts_per_day"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["calendar"] = self.calendar.to_dict()
        d["posts_per_day"] = list(self.posts_per_day)
        return d


@dataclass
class GroundTruth:
    severity: dict[str, float]
    population: dict[str, int]
    claims: dict[str, int]
    inundation_pct: dict[str, float]


def stage_profile(calendar: StudyCalendar, date: dt.date, floor: float = 0.2) -> float:
    """0 before the flood; linear ramp to 1 over the first third of response; plateau;
    linear decay towards ``floor`` across recovery."""
    if date < calendar.post_normal_start:
        return 0.0
    if date <= calendar.response_end:
        length = (calendar.response_end - calendar.post_normal_start).days + 1
        ramp = max(1, math.ceil(length / 3))
        return min(1.0, ((date - calendar.post_normal_start).days + 1) / ramp)
    length = (calendar.study_end - calendar.response_end).days
    k = (date - calendar.response_end).days
    return 1.0 - (1.0 - floor) * k / length


def _csv_text(header, rows) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _f(x: float, nd: int = 4) -> str:
    return f"{x:.{nd}f}"


def generate_scenario(config: ScenarioConfig) -> tuple[dict[str, str], GroundTruth]:
    """Return ({filename: csv text}, ground truth). Same config, same bytes."""
    cfg = config
    cal = cfg.calendar
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed) & 0xFFFFFFFFFFFFFFFF, 2017]))
    zones = [f"{77000 + i + 1:05d}" for i in range(cfg.n_zones)]
    nz = len(zones)
    days = cal.all_dates()
    profile = np.array([stage_profile(cal, d, cfg.recovery_floor) for d in days])

    severity = rng.uniform(0.0, 1.0, nz)
    population = rng.integers(5000, 60001, nz)
    claims = np.rint(population * cfg.claims_rate * severity).astype(int)
    cut = np.quantile(severity, cfg.zero_inundation_fraction) if cfg.zero_inundation_fraction else -1.0
    inundation = np.where(severity <= cut, 0.0, np.maximum(np.round(100.0 * severity, 4), 1e-4))

    # zone x day disruption: severity * profile
    hit = severity[:, None] * profile[None, :]
    eff, sd = cfg.effect_size, cfg.noise_sd

    def level(channel, sign=-1.0, size=None):
        mult = 1.0 + sign * eff[channel] * hit
        if size is not None:
            mult = np.broadcast_to(mult[..., None], mult.shape + (size,))
        noise = rng.normal(0.0, 1.0, mult.shape) * sd[channel]
        return np.maximum(mult + noise, 0.0)

    files: dict[str, str] = {}

    # activity: tiles sampled every 24/samples_per_day hours
    base_act = rng.uniform(50.0, 150.0, nz)
    tile_factor = rng.uniform(0.5, 1.5, (nz, cfg.tiles_per_zone))
    act = level("activity", -1.0, cfg.tiles_per_zone)          # (nz, ndays, tiles)
    jitter = rng.normal(0.0, 0.02, (nz, len(days), cfg.tiles_per_zone, cfg.samples_per_day))
    step = 24 // cfg.samples_per_day
    rows, map_rows = [], []
    for zi, z in enumerate(zones):
        for t in range(cfg.tiles_per_zone):
            tile = f"t{z}_{t}"
            map_rows.append((tile, z))
            for di, d in enumerate(days):
                base = base_act[zi] * tile_factor[zi, t] * act[zi, di, t]
                for s in range(cfg.samples_per_day):
                    v = max(base * (1.0 + jitter[zi, di, t, s]), 0.0)
                    rows.append((tile, f"{d.isoformat()}T{s * step:02d}:00:00", _f(v)))
    files["activity.csv"] = _csv_text(("tile_id", "timestamp", "activity"), rows)
    files["tile_zone_map.csv"] = _csv_text(("tile_id", "zone"), map_rows)

    # traffic: congestion probability rises with disruption
    base_p = rng.uniform(0.05, 0.2, nz)
    limits = rng.choice(np.array([30.0, 45.0, 60.0, 65.0]), (nz, cfg.segments_per_zone))
    p_cong = np.clip(base_p[:, None] * level("congestion", +1.0), 0.0, 1.0)   # (nz, ndays)
    slot_minutes = (np.arange(cfg.periods_per_day) * (288 // cfg.periods_per_day)) * 5
    shape = (nz, len(days), cfg.segments_per_zone, cfg.periods_per_day)
    congested = rng.uniform(0.0, 1.0, shape) < p_cong[:, :, None, None]
    ratio = np.where(congested, rng.uniform(0.15, 0.45, shape), rng.uniform(0.55, 1.0, shape))
    rows = []
    for zi, z in enumerate(zones):
        for di, d in enumerate(days):
            for s in range(cfg.segments_per_zone):
                lim = limits[zi, s]
                seg = f"s{z}_{s}"
                for p, minute in enumerate(slot_minutes):
                    stamp = f"{d.isoformat()}T{minute // 60:02d}:{minute % 60:02d}:00"
                    rows.append((seg, z, stamp, _f(ratio[zi, di, s, p] * lim, 1), _f(lim, 1)))
    files["traffic.csv"] = _csv_text(
        ("segment_id", "zone", "interval_start", "avg_speed", "speed_limit"), rows)

    # transactions
    base_cards = rng.uniform(50.0, 500.0, nz)
    tx_per_card = rng.uniform(1.5, 3.0, nz)
    spend_per_tx = rng.uniform(20.0, 60.0, nz)
    tx = level("transactions", -1.0, 3)
    rows = []
    for zi, z in enumerate(zones):
        for di, d in enumerate(days):
            cards = base_cards[zi] * tx[zi, di, 0]
            ntx = base_cards[zi] * tx_per_card[zi] * tx[zi, di, 1]
            spent = base_cards[zi] * tx_per_card[zi] * spend_per_tx[zi] * tx[zi, di, 2]
            rows.append((z, d.isoformat(), int(round(cards)), int(round(ntx)), _f(spent, 2)))
    files["transactions.csv"] = _csv_text(
        ("zone", "date", "n_cards", "n_transactions", "total_spent"), rows)

    # posts, only from the posts baseline start onwards
    rate = rng.uniform(*cfg.posts_per_day, nz)
    shift = np.clip(eff["posts"] * hit, 0.0, 1.0)
    volume = level("posts", 0.0)   # noise only: volume is not a planted channel
    rows = []
    pid = 0
    base_probs = np.array([0.5, 0.3, 0.2])
    for di, d in enumerate(days):
        if d < cal.twitter_normal_start:
            continue
        for zi, z in enumerate(zones):
            k = int(rng.poisson(rate[zi] * volume[zi, di]))
            sh = shift[zi, di]
            probs = np.array([base_probs[0] * (1 - sh), base_probs[1], base_probs[2] + base_probs[0] * sh])
            kinds = rng.choice(3, size=k, p=probs / probs.sum())
            secs = np.sort(rng.integers(0, 86400, size=k))
            for kind, sec in zip(kinds, secs):
                pid += 1
                stamp = dt.datetime.combine(d, dt.time()) + dt.timedelta(seconds=int(sec))
                rows.append((f"p{pid:07d}", z, stamp.isoformat(timespec="seconds"), _post_text(rng, kind)))
    files["posts.csv"] = _csv_text(("post_id", "zone", "timestamp", "text"), rows)

    files["claims.csv"] = _csv_text(("zone", "n_claims"), zip(zones, claims.tolist()))
    files["population.csv"] = _csv_text(("zone", "population"), zip(zones, population.tolist()))
    files["inundation.csv"] = _csv_text(
        ("zone", "inundation_pct"), ((z, _f(v)) for z, v in zip(zones, inundation)))
    files["ground_truth.csv"] = _csv_text(
        ("zone", "severity"), ((z, repr(float(s))) for z, s in zip(zones, severity)))
    data = resources.files("floodrank") / "data"
    files["lexicon.tsv"] = (data / "lexicon.tsv").read_text(encoding="utf-8")
    files["negations.txt"] = (data / "negations.txt").read_text(encoding="utf-8")

    truth = GroundTruth(
        severity={z: float(s) for z, s in zip(zones, severity)},
        population={z: int(p) for z, p in zip(zones, population)},
        claims={z: int(c) for z, c in zip(zones, claims)},
        inundation_pct={z: float(v) for z, v in zip(zones, inundation)},
    )
    return files, truth


def _post_text(rng, kind: int) -> str:
    filler = [_FILLER[i] for i in rng.integers(0, len(_FILLER), 3)]
    if kind == 0:
        words = [_POSITIVE[i] for i in rng.integers(0, len(_POSITIVE), 2)]
    elif kind == 2:
        if rng.uniform() < 0.25:
            words = ["not", _POSITIVE[int(rng.integers(0, len(_POSITIVE)))]]
        else:
            words = [_NEGATIVE[i] for i in rng.integers(0, len(_NEGATIVE), 2)]
    else:
        words = []
    tokens = filler[:2] + words + filler[2:]
    text = " ".join(tokens)
    if rng.uniform() < 0.2:
        text = text.replace(" ", ", ", 1)
    return text


def write_fileset(files: dict[str, str], directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in sorted(files):
        (directory / name).write_text(files[name], encoding="utf-8", newline="")
    return directory


def null_config(**overrides) -> ScenarioConfig:
    return replace(ScenarioConfig(**overrides), effect_size=dict.fromkeys(CHANNELS, 0.0))
