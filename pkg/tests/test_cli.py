import hashlib
import json

import pytest

from floodrank.cli import run


def write_config(tmp_path, **extra):
    cfg = {
        "inputs": {"dir": "data"},
        "synth": {"n_zones": 30, "periods_per_day": 4, "samples_per_day": 2,
                  "effect_size": {"activity": 0.8}},
        "forest": {"n_trees": 10},
        "measures": ["claims"],
        "classes": [2],
        "evaluate": False,
        "out": "out",
        "seed": 11,
    }
    cfg.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def digests(root):
    return {p.relative_to(root).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_synth_then_validate(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert run(["synth", "--config", str(cfg)]) == 0
    assert (tmp_path / "data" / "activity.csv").exists()
    assert run(["validate", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out.startswith("ok:")


def test_analyze_deterministic_and_manifest(tmp_path):
    cfg = write_config(tmp_path)
    assert run(["synth", "--config", str(cfg)]) == 0
    inputs_before = digests(tmp_path / "data")
    assert run(["analyze", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert run(["analyze", "--config", str(cfg), "--out", str(tmp_path / "b"), "--jobs", "3"]) == 0
    a, b = digests(tmp_path / "a" / "reports"), digests(tmp_path / "b" / "reports")
    assert a and a == b
    assert digests(tmp_path / "data") == inputs_before
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 11
    assert "reports/claims_2/bundle.json" in json.dumps(manifest)
    ranks = (tmp_path / "a" / "reports" / "claims_2" / "ranks_response.csv").read_text().splitlines()
    assert ranks[1].startswith("FE1,") and ranks[1].endswith(",1")


def test_features_and_labels_subcommands(tmp_path):
    cfg = write_config(tmp_path, classes=[2, 3])
    run(["synth", "--config", str(cfg)])
    assert run(["features", "--config", str(cfg)]) == 0
    assert run(["labels", "--config", str(cfg), "--measure", "both"]) == 0
    out = tmp_path / "out"
    assert len(list((out / "features").glob("*.csv"))) == 22
    assert len(list((out / "labels").glob("*.csv"))) == 4


def test_exit_codes(tmp_path, capsys):
    missing = tmp_path / "none.json"
    assert run(["validate", "--config", str(missing)]) == 2
    cfg = write_config(tmp_path)
    # referenced inputs must exist, so a missing file is a config problem
    assert run(["validate", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert err.startswith("error code=") and "exit=2" in err
    assert run(["synth", "--config", str(cfg)]) == 0
    act = tmp_path / "data" / "activity.csv"
    act.write_text(act.read_text() + "t1,not-a-time,1.0\n")
    assert run(["validate", "--config", str(cfg)]) == 3
    bad = write_config(tmp_path, impute="mean")
    assert run(["validate", "--config", str(bad)]) == 2


def test_degenerate_exit_code(tmp_path):
    cfg = write_config(tmp_path, synth={"n_zones": 8, "periods_per_day": 1, "samples_per_day": 1})
    run(["synth", "--config", str(cfg)])
    claims = tmp_path / "data" / "claims.csv"
    lines = claims.read_text().splitlines()
    claims.write_text("\n".join([lines[0]] + [l.split(",")[0] + ",0" for l in lines[1:]]) + "\n")
    assert run(["labels", "--config", str(cfg), "--measure", "claims", "--classes", "3"]) == 4
