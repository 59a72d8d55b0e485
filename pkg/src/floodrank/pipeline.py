"""Config loading and the end-to-end run steps shared by the CLI subcommands."""
from __future__ import annotations

import copy
import hashlib
import json
import logging
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import Report, TuningConfig, emit_report, run_daily_models, summarize
from .core import StudyCalendar
from .errors import ConfigError, DataError
from .features import IMPUTE_POLICIES, FeatureMatrix, build_matrices
from .forest import BACKEND, ForestParams
from .ingest import FILENAMES, ZoneDaySeries, build_series, read_source, tile_zone_map
from .labels import ImpactKind, LabelScheme, claims_measure, classify_by_percentiles, labels_to_csv
from .sentiment import Scorer, load_lexicon

log = logging.getLogger(__name__)

SOURCE_FILES = ("activity", "tile_zone_map", "traffic", "transactions", "posts")
LABEL_FILES = ("claims", "population", "inundation")

DEFAULT_CONFIG = {
    "inputs": {"dir": "data"},
    "calendar": StudyCalendar.harvey().to_dict(),
    "impute": "median",
    "measures": ["claims", "inundation"],
    "classes": [2, 3, 4],
    "forest": ForestParams().to_dict(),
    "tuning": {"enabled": False, "n_iter": 10, "k_folds": 3, "space": None},
    "evaluate": True,
    "persistence_k": 2,
    "out": "out",
    "seed": 0,
    "n_jobs": 1,
    "synth": None,
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class PipelineConfig:
    raw: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> PipelineConfig:
        data, base = {}, Path.cwd()
        if path is not None:
            path = Path(path)
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
            except FileNotFoundError:
                raise ConfigError(f"config file not found: {path}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from None
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: top level must be an object")
            base = path.resolve().parent
        unknown = set(data) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        raw = _merge(DEFAULT_CONFIG, data)
        raw = _merge(raw, overrides or {})
        cfg = cls(raw, base)
        cfg.validate()
        return cfg

    def validate(self):
        r = self.raw
        self.calendar  # noqa: B018  (raises ConfigError when invalid)
        if r["impute"] not in IMPUTE_POLICIES:
            raise ConfigError(f"impute must be one of {IMPUTE_POLICIES}")
        for m in r["measures"]:
            if m not in {k.value for k in ImpactKind}:
                raise ConfigError(f"unknown measure {m!r}")
        for n in r["classes"]:
            if n not in (2, 3, 4):
                raise ConfigError(f"classes must be 2, 3 or 4, got {n!r}")
        try:
            self.forest_params
            self.tuning
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if int(r["persistence_k"]) < 0:
            raise ConfigError("persistence_k must be >= 0")

    @property
    def calendar(self) -> StudyCalendar:
        return StudyCalendar.from_dict(self.raw["calendar"])

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def forest_params(self) -> ForestParams:
        p = ForestParams.from_dict(self.raw["forest"])
        return ForestParams(**{**p.to_dict(), "seed": self.seed})

    @property
    def tuning(self) -> TuningConfig:
        t = self.raw["tuning"]
        return TuningConfig(bool(t.get("enabled", False)), int(t.get("n_iter", 10)),
                            int(t.get("k_folds", 3)), t.get("space"))

    @property
    def out_dir(self) -> Path:
        return self.resolve(self.raw["out"])

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def input_path(self, name: str) -> Path:
        inputs = self.raw["inputs"]
        if name in inputs:
            return self.resolve(inputs[name])
        filename = {"lexicon": "lexicon.tsv", "negations": "negations.txt"}.get(name, FILENAMES.get(name))
        return self.resolve(inputs.get("dir", ".")) / filename

    def schemes(self) -> list[LabelScheme]:
        return [LabelScheme(ImpactKind(m), int(n)) for m in self.raw["measures"]
                for n in self.raw["classes"]]

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True).encode()).hexdigest()


@dataclass
class Inputs:
    records: dict[str, list]
    paths: dict[str, Path]


def load_inputs(cfg: PipelineConfig, names=SOURCE_FILES + LABEL_FILES) -> Inputs:
    records, paths = {}, {}
    for name in names:
        path = cfg.input_path(name)
        if not path.exists():
            raise ConfigError(f"input file for {name!r} not found: {path}")
        records[name] = read_source(name, path)
        paths[name] = path
    return Inputs(records, paths)


def lexicon_for(cfg: PipelineConfig):
    lex, neg = cfg.input_path("lexicon"), cfg.input_path("negations")
    return load_lexicon(lex if lex.exists() else None, neg if neg.exists() else None)


def compute_series(cfg: PipelineConfig, inputs: Inputs) -> ZoneDaySeries:
    r = inputs.records
    scorer = Scorer(lexicon_for(cfg))
    return build_series(r["activity"], tile_zone_map(r["tile_zone_map"]), r["traffic"],
                        r["transactions"], r["posts"], scorer)


def impact_values(inputs: Inputs, kind: ImpactKind) -> dict[str, float]:
    r = inputs.records
    if kind is ImpactKind.CLAIMS:
        pop = {x.zone: int(x.value) for x in r["population"]}
        return claims_measure({x.zone: int(x.value) for x in r["claims"]}, pop)
    return {x.zone: float(x.value) for x in r["inundation"]}


def compute_labels(inputs: Inputs, schemes) -> dict[str, dict[str, int]]:
    return {s.name: classify_by_percentiles(impact_values(inputs, s.kind), s) for s in schemes}


def compute_matrices(cfg: PipelineConfig, series: ZoneDaySeries,
                     zones=None) -> dict:
    return build_matrices(series, cfg.calendar, cfg.raw["impute"], zones=zones)


def write_features(matrices: dict, out_dir: Path) -> list[Path]:
    d = out_dir / "features"
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for date, m in sorted(matrices.items()):
        p = d / f"features_{date.isoformat()}.csv"
        p.write_text(m.to_csv(), encoding="utf-8", newline="")
        paths.append(p)
    return paths


def write_labels(labels: dict[str, dict[str, int]], out_dir: Path) -> list[Path]:
    d = out_dir / "labels"
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, lab in sorted(labels.items()):
        p = d / f"labels_{name}.csv"
        p.write_text(labels_to_csv(lab), encoding="utf-8", newline="")
        paths.append(p)
    return paths


def analyze_scheme(cfg: PipelineConfig, matrices: dict[object, FeatureMatrix],
                   labels: dict[str, int], scheme: LabelScheme) -> Report:
    zones = set(labels)
    for m in matrices.values():
        missing = [z for z in m.zones if z not in zones]
        if missing:
            raise DataError(f"{scheme.name}: zones without impact data: {', '.join(missing[:10])}")
    results = run_daily_models(matrices, labels, cfg.forest_params, cfg.tuning,
                               n_classes=scheme.n_classes, evaluate=bool(cfg.raw["evaluate"]),
                               k_folds=cfg.tuning.k_folds, n_jobs=int(cfg.raw["n_jobs"]))
    k = int(cfg.raw["persistence_k"])
    summaries = summarize(results, cfg.calendar, k)
    return Report(scheme.kind.value, scheme.n_classes, k, cfg.seed, results, summaries)


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(cfg: PipelineConfig, command: str, inputs: dict[str, Path],
                   outputs: list[Path]) -> Path:
    out = cfg.out_dir
    manifest = {
        "command": command,
        "config": cfg.raw,
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "versions": {"floodrank": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "forest_backend": BACKEND},
        "inputs": {k: {"path": str(p), "sha256": sha256_file(p)} for k, p in sorted(inputs.items())},
        "outputs": {str(p.relative_to(out)): sha256_file(p) for p in sorted(outputs)},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def run_analysis(cfg: PipelineConfig) -> tuple[list[Report], list[Path], Inputs]:
    """Features, labels and reports for every configured scheme; returns written paths."""
    inputs = load_inputs(cfg)
    series = compute_series(cfg, inputs)
    schemes = cfg.schemes()
    labels = compute_labels(inputs, schemes)
    label_zones = sorted(set.intersection(*(set(v) for v in labels.values()))) if labels else None
    feature_zones = sorted(set(series.zones()) & set(label_zones)) if label_zones else None
    dropped = sorted(set(series.zones()) - set(feature_zones or series.zones()))
    if dropped:
        log.warning("%d zones have activity data but no impact labels; skipped", len(dropped))
    matrices = compute_matrices(cfg, series, zones=feature_zones)
    out = cfg.out_dir
    written = write_features(matrices, out) + write_labels(labels, out)
    reports = []
    for scheme in schemes:
        rep = analyze_scheme(cfg, matrices, labels[scheme.name], scheme)
        written += emit_report(rep, out / "reports")
        reports.append(rep)
    return reports, written, inputs
