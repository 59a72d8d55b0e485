"""Command-line front end: validate, features, labels, analyze, synth, full."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, ContractError, FloodRankError
from .pipeline import (
    LABEL_FILES,
    SOURCE_FILES,
    PipelineConfig,
    compute_labels,
    compute_matrices,
    compute_series,
    load_inputs,
    run_analysis,
    write_features,
    write_labels,
    write_manifest,
)
from .synth import ScenarioConfig, generate_scenario, write_fileset

log = logging.getLogger("floodrank")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON pipeline config")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--measure", choices=["claims", "inundation", "both"])
    common.add_argument("--classes", choices=["2", "3", "4", "all"])
    common.add_argument("--tune", action="store_true", default=None,
                        help="random-search hyperparameters per day")
    common.add_argument("--persistence-k", type=int, dest="persistence_k")
    common.add_argument("--impute", choices=["median", "zero", "drop"])
    common.add_argument("--jobs", type=int, help="threads for tree-level parallelism")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="floodrank", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="parse and schema-check all inputs")
    sub.add_parser("features", parents=[common], help="write per-day feature CSVs")
    sub.add_parser("labels", parents=[common], help="write label files for requested schemes")
    sub.add_parser("analyze", parents=[common], help="daily models and rank reports")
    sub.add_parser("synth", parents=[common], help="generate a synthetic input fileset")
    sub.add_parser("full", parents=[common], help="synth (if configured) then analyze")
    return p


def _overrides(args) -> dict:
    o: dict = {}
    if args.seed is not None:
        o["seed"] = args.seed
    if args.out is not None:
        o["out"] = str(Path(args.out).resolve())
    if args.measure is not None:
        o["measures"] = ["claims", "inundation"] if args.measure == "both" else [args.measure]
    if args.classes is not None:
        o["classes"] = [2, 3, 4] if args.classes == "all" else [int(args.classes)]
    if args.tune:
        o["tuning"] = {"enabled": True}
    if args.persistence_k is not None:
        o["persistence_k"] = args.persistence_k
    if args.impute is not None:
        o["impute"] = args.impute
    if args.jobs is not None:
        o["n_jobs"] = args.jobs
    return o


def _synth(cfg: PipelineConfig) -> list[Path]:
    block = cfg.raw.get("synth")
    if block is None:
        raise ConfigError("config has no 'synth' block")
    block = {**block, "seed": block.get("seed", cfg.seed)}
    block.setdefault("calendar", cfg.raw["calendar"])
    scenario = ScenarioConfig.from_dict(block)
    files, _ = generate_scenario(scenario)
    target = cfg.input_path("activity").parent
    write_fileset(files, target)
    log.info("wrote %d synthetic files to %s", len(files), target)
    return [target / name for name in sorted(files)]


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = PipelineConfig.load(args.config, _overrides(args))
        out = cfg.out_dir
        cmd = args.command
        if cmd == "synth":
            out.mkdir(parents=True, exist_ok=True)
            written = _synth(cfg)
            write_manifest(cfg, cmd, {}, [p for p in written if p.is_relative_to(out)])
        elif cmd == "validate":
            inputs = load_inputs(cfg)
            n = sum(len(v) for v in inputs.records.values())
            print(f"ok: {len(inputs.records)} files, {n} records")
        elif cmd == "features":
            inputs = load_inputs(cfg, SOURCE_FILES)
            matrices = compute_matrices(cfg, compute_series(cfg, inputs))
            written = write_features(matrices, out)
            write_manifest(cfg, cmd, inputs.paths, written)
        elif cmd == "labels":
            inputs = load_inputs(cfg, LABEL_FILES)
            written = write_labels(compute_labels(inputs, cfg.schemes()), out)
            write_manifest(cfg, cmd, inputs.paths, written)
        else:
            if cmd == "full" and cfg.raw.get("synth") is not None:
                _synth(cfg)
            reports, written, inputs = run_analysis(cfg)
            write_manifest(cfg, cmd, inputs.paths, written)
            for rep in reports:
                log.info("report %s_%d: %d days", rep.measure, rep.n_classes, len(rep.results))
    except FloodRankError as exc:
        print(f"error code={exc.code} exit={exc.exit_code}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ContractError as exc:
        print(f"error code=CONTRACT exit=4: {exc}", file=sys.stderr)
        return 4
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
