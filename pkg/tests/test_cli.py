import hashlib
import json
import logging
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from cswitness import cli, pipeline
from cswitness.errors import TrainingError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
HONEST = CONFIGS / "two_node_honest.json"
CLIQUE = CONFIGS / "clique5_selfish.json"


def _run(*argv):
    return cli.main([str(a) for a in argv])


def _tree(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


@pytest.fixture(scope="module")
def honest_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("honest")
    assert _run("run", "--config", HONEST, "--out", out) == 0
    return out


@pytest.fixture(scope="module")
def clique_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("clique")
    assert _run("run", "--config", CLIQUE, "--out", out) == 0
    return out


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_run_writes_every_artifact(honest_dir):
    names = set(p.name for p in honest_dir.iterdir())
    assert {"transmissions.csv", "sniffer_s0.csv", "merged.csv", "obs_x_y.csv", "obs_x_y.json",
            "model_x_y.json", "inference.json", "report.json", "series.csv",
            "manifest.json"} <= names


def test_manifest_checksums_are_correct(honest_dir):
    manifest = json.loads((honest_dir / "manifest.json").read_text())
    assert manifest["master_seed"] == 3
    assert manifest["config_sha256"] == hashlib.sha256(HONEST.read_bytes()).hexdigest()
    listed = manifest["files"]
    assert set(listed) == {p.name for p in honest_dir.iterdir()} - {"manifest.json"}
    for name, digest in listed.items():
        assert hashlib.sha256((honest_dir / name).read_bytes()).hexdigest() == digest


def test_rerun_is_byte_identical(honest_dir, tmp_path):
    assert _run("run", "--config", HONEST, "--out", tmp_path) == 0
    assert _tree(tmp_path) == _tree(honest_dir)


def test_staged_execution_equals_run(honest_dir, tmp_path):
    for stage in pipeline.STAGES:
        assert _run(stage, "--config", HONEST, "--out", tmp_path) == 0
    assert _tree(tmp_path) == _tree(honest_dir)


def test_seed_override_changes_outputs(honest_dir, tmp_path):
    assert _run("simulate", "--config", HONEST, "--out", tmp_path, "--seed", "4") == 0
    assert (tmp_path / "transmissions.csv").read_bytes() != (honest_dir / "transmissions.csv").read_bytes()
    assert json.loads((tmp_path / "manifest.json").read_text())["master_seed"] == 4


def test_honest_scenario_flags_nobody(honest_dir):
    assert not any(n["flagged"] for n in _report(honest_dir)["nodes"])


@pytest.mark.slow
def test_selfish_node_flagged(clique_dir):
    report = _report(clique_dir)
    assert [n["node_id"] for n in report["nodes"] if n["flagged"]] == ["n0"]
    assert len(report["pairs"]) == 10


@pytest.mark.slow
def test_higher_threshold_never_adds_flags(clique_dir, tmp_path):
    work = tmp_path / "w"
    shutil.copytree(clique_dir, work)
    before = sum(n["flagged"] for n in _report(work)["nodes"])
    assert _run("detect", "--config", CLIQUE, "--out", work, "--tau-selfish", "0.9") == 0
    after = sum(n["flagged"] for n in _report(work)["nodes"])
    assert after <= before


def test_pair_restriction(tmp_path):
    for stage in ("simulate", "capture", "merge"):
        assert _run(stage, "--config", CLIQUE, "--out", tmp_path, "--seed", "1") == 0
    assert _run("infer", "--config", CLIQUE, "--out", tmp_path, "--seed", "1", "--pair", "n3,n1") == 0
    entries = json.loads((tmp_path / "inference.json").read_text())["pairs"]
    assert [(e["x"], e["y"]) for e in entries] == [("n1", "n3")]
    assert _run("infer", "--config", CLIQUE, "--out", tmp_path, "--pair", "n1,ap") == 1


def test_missing_stage_input_exits_1(tmp_path, caplog):
    with caplog.at_level(logging.ERROR):
        assert _run("capture", "--config", HONEST, "--out", tmp_path) == 1
    assert str(tmp_path / "transmissions.csv") in caplog.text


def test_missing_config_exits_1(tmp_path, caplog):
    with caplog.at_level(logging.ERROR):
        assert _run("run", "--config", tmp_path / "nope.json", "--out", tmp_path) == 1
    assert "nope.json" in caplog.text


def test_invalid_config_exits_1(tmp_path, caplog):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"topology": {"nodes": ["a", "b"], "links": [["a", "b"]]},
                               "sim": {"total_slots": 100}, "nodes": [{"node_id": "a", "p_s": 2}]}))
    with caplog.at_level(logging.ERROR):
        assert _run("run", "--config", bad, "--out", tmp_path / "o") == 1
    assert "nodes[0].p_s" in caplog.text


def test_idle_observations_are_insufficient_evidence(tmp_path):
    obs = tmp_path / "quiet.csv"
    obs.write_text("slot,symbol\n" + "".join(f"{t},i\n" for t in range(500)))
    obs.with_suffix(".json").write_text(json.dumps(
        {"pair_x": "x", "pair_y": "y", "first_slot": 0, "last_slot": 499}))
    out = tmp_path / "out"
    assert _run("infer", "--config", HONEST, "--out", out, "--obs", obs) == 0
    entry = json.loads((out / "inference.json").read_text())["pairs"][0]
    assert entry["status"] == "insufficient_evidence"
    assert _run("detect", "--config", HONEST, "--out", out) == 0
    assert _report(out)["pairs"] == []


def test_training_failure_exits_2(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise TrainingError("observation impossible under every restart; first impossible slot 7", slot=7)

    monkeypatch.setattr(pipeline, "baum_welch", boom)
    assert _run("run", "--config", HONEST, "--out", tmp_path) == 2


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cswitness", "simulate", "--config", str(HONEST),
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "transmissions.csv").is_file()
    proc = subprocess.run([sys.executable, "-m", "cswitness", "bogus"], capture_output=True)
    assert proc.returncode != 0
