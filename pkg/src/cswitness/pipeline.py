"""Pipeline stages over a flat output directory.

Every stage reads only files written by earlier stages, so stages can be
re-run in isolation.  After each stage ``manifest.json`` is rewritten with
the SHA-256 of every artifact in the directory.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from . import metrics
from .config import ScenarioConfig
from .detector import (
    DetectorConfig,
    PairInference,
    SelfishnessReport,
    evidence_slots,
    infer_pair,
    selfishness_scores,
)
from .errors import InsufficientEvidence, ValidationError
from .hmm import baum_welch, pair_template_model
from .hmm.model import TrainConfig
from .simulator import (
    SimOutput,
    deferrals_to_csv,
    deliveries_from_csv,
    deliveries_to_csv,
    run_simulation,
    transmissions_from_csv,
    transmissions_to_csv,
)
from .sniffer import (
    MergedTrace,
    ObservationSequence,
    capture,
    extract_observations,
    merge,
    merged_from_csv,
    merged_to_csv,
    observations_from_files,
    observations_to_files,
    trace_from_csv,
    trace_to_csv,
)

log = logging.getLogger(__name__)

TRANSMISSIONS = "transmissions.csv"
DELIVERIES = "deliveries.csv"
DEFERRALS = "deferrals.csv"
MERGED = "merged.csv"
INFERENCE = "inference.json"
REPORT = "report.json"
SERIES = "series.csv"
MANIFEST = "manifest.json"
STAGES = ("simulate", "capture", "merge", "infer", "detect", "metrics")


def sniffer_file(sniffer_id: str) -> str:
    return f"sniffer_{sniffer_id}.csv"


def pair_stem(pair: tuple[str, str]) -> str:
    return f"{pair[0]}_{pair[1]}"


def _read(out: Path, name: str) -> bytes:
    path = out / name
    if not path.is_file():
        raise FileNotFoundError(str(path))
    return path.read_bytes()


def _write(out: Path, name: str, data: bytes) -> None:
    (out / name).write_bytes(data)


def _json(obj) -> bytes:
    return (json.dumps(obj, indent=2) + "\n").encode("utf-8")


def write_manifest(cfg: ScenarioConfig, out: Path) -> dict:
    files = {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(out.iterdir())
        if p.is_file() and p.name != MANIFEST
    }
    manifest = {"config_sha256": cfg.source_sha256, "master_seed": cfg.seed, "files": files}
    _write(out, MANIFEST, _json(manifest))
    return manifest


def _sim_output(cfg: ScenarioConfig, out: Path, with_deliveries: bool = False) -> SimOutput:
    records = tuple(transmissions_from_csv(_read(out, TRANSMISSIONS)))
    deliveries = deliveries_from_csv(_read(out, DELIVERIES)) if with_deliveries else {}
    return SimOutput(records, (), deliveries, cfg.sim.total_slots, cfg.sim.packet_len,
                     cfg.sim.packet_bytes)


def simulate(cfg: ScenarioConfig, out: Path) -> SimOutput:
    result = run_simulation(cfg.topology, list(cfg.nodes), cfg.sim)
    _write(out, TRANSMISSIONS, transmissions_to_csv(result))
    _write(out, DELIVERIES, deliveries_to_csv(result))
    _write(out, DEFERRALS, deferrals_to_csv(result))
    return result


def capture_stage(cfg: ScenarioConfig, out: Path) -> None:
    result = _sim_output(cfg, out)
    for sc in cfg.sniffers:
        _write(out, sniffer_file(sc.sniffer_id), trace_to_csv(capture(result, sc)))


def merge_stage(cfg: ScenarioConfig, out: Path) -> None:
    traces = [
        trace_from_csv(_read(out, sniffer_file(sc.sniffer_id)), cfg.sim.total_slots, sc.sniffer_id)
        for sc in cfg.sniffers
    ]
    _write(out, MERGED, merged_to_csv(merge(traces, cfg.sim.total_slots)))


def train_pair(obs: ObservationSequence, seed: int, train: TrainConfig, epsilon: float):
    init = pair_template_model(epsilon, seed)
    return baum_welch(init, obs, TrainConfig(train.max_iters, train.tol, train.restarts,
                                             train.freeze_emissions, seed))


def _infer_one(obs: ObservationSequence, seed: int, cfg: ScenarioConfig) -> tuple[dict, bytes]:
    tr = train_pair(obs, seed, cfg.train, cfg.epsilon)
    entry = {"x": obs.pair[0], "y": obs.pair[1], "iterations": tr.iterations, "restart": tr.restart}
    try:
        inf = infer_pair(tr, obs.pair, cfg.detector)
    except InsufficientEvidence as exc:
        entry.update(status="insufficient_evidence", reason=str(exc),
                     log_likelihood=float(tr.log_likelihood), evidence_slots=evidence_slots(tr))
    else:
        entry.update(status="ok", **{k: v for k, v in inf.to_dict().items() if k not in ("x", "y")})
    return entry, tr.model.to_json()


def infer_stage(cfg: ScenarioConfig, out: Path, pairs=None, obs_path: Path | None = None) -> list[dict]:
    """Train one pair model per pair and record the deferral estimates.

    With ``obs_path`` the stage trains on that observation file (and its
    ``.json`` sidecar) instead of extracting from the merged trace.
    """
    entries = []
    if obs_path is not None:
        sidecar = obs_path.with_suffix(".json")
        for p in (obs_path, sidecar):
            if not p.is_file():
                raise FileNotFoundError(str(p))
        obs = observations_from_files(obs_path.read_bytes(), sidecar.read_bytes())
        pair = tuple(sorted(obs.pair))
        seed = cfg.pair_seed(pair) if pair in cfg.pairs else cfg.seed
        entry, model = _infer_one(obs, seed, cfg)
        _write(out, f"model_{pair_stem(obs.pair)}.json", model)
        entries.append(entry)
    else:
        merged = merged_from_csv(_read(out, MERGED), cfg.sim.total_slots)
        selected = cfg.pairs if pairs is None else tuple(pairs)
        for pair in selected:
            if pair not in cfg.pairs:
                raise ValidationError(f"pair {pair} is not part of the scenario")
            obs = extract_observations(merged, pair[0], pair[1], cfg.window)
            body, sidecar = observations_to_files(obs)
            _write(out, f"obs_{pair_stem(pair)}.csv", body)
            _write(out, f"obs_{pair_stem(pair)}.json", sidecar)
            entry, model = _infer_one(obs, cfg.pair_seed(pair), cfg)
            _write(out, f"model_{pair_stem(pair)}.json", model)
            log.info("pair %s: %s", pair, entry["status"])
            entries.append(entry)
    _write(out, INFERENCE, _json({"pairs": entries}))
    return entries


def detect_stage(cfg: ScenarioConfig, out: Path, detector: DetectorConfig | None = None):
    detector = detector or cfg.detector
    entries = json.loads(_read(out, INFERENCE).decode("utf-8"))["pairs"]
    scored = [PairInference.from_dict(e) for e in entries if e["status"] == "ok"]
    senders = sorted(s for s, _ in cfg.topology.links)
    report = selfishness_scores(scored, detector, nodes=senders)
    _write(out, REPORT, report.to_json())
    return report


def metrics_stage(cfg: ScenarioConfig, out: Path, bucket_slots: int | None = None) -> None:
    bucket = bucket_slots or cfg.bucket_slots
    result = _sim_output(cfg, out, with_deliveries=True)
    samples = metrics.time_series(result, bucket, cfg.sim.packet_bytes)
    _write(out, SERIES, metrics.series_to_csv(samples, bucket, cfg.slot_seconds))


def run_stage(name: str, cfg: ScenarioConfig, out: Path, **opts) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if name == "simulate":
        simulate(cfg, out)
    elif name == "capture":
        capture_stage(cfg, out)
    elif name == "merge":
        merge_stage(cfg, out)
    elif name == "infer":
        infer_stage(cfg, out, opts.get("pairs"), opts.get("obs_path"))
    elif name == "detect":
        detect_stage(cfg, out, opts.get("detector"))
    elif name == "metrics":
        metrics_stage(cfg, out, opts.get("bucket_slots"))
    else:
        raise ValueError(f"unknown stage {name!r}")
    write_manifest(cfg, out)


def run_pipeline(cfg: ScenarioConfig, out: Path, **opts) -> dict:
    """Run every stage in order; returns the final manifest."""
    for name in STAGES:
        run_stage(name, cfg, out, **opts)
    return json.loads(_read(out, MANIFEST))


@dataclass(frozen=True)
class Analysis:
    """Everything an in-memory run produces, ground truth included."""

    sim: SimOutput
    merged: MergedTrace
    trainings: dict
    inferences: tuple[PairInference, ...]
    excluded: tuple[tuple[str, str], ...]
    report: SelfishnessReport


def analyze(cfg: ScenarioConfig) -> Analysis:
    """simulate -> capture -> merge -> extract -> train -> detect without touching disk."""
    result = run_simulation(cfg.topology, list(cfg.nodes), cfg.sim)
    merged = merge([capture(result, sc) for sc in cfg.sniffers], cfg.sim.total_slots)
    trainings, inferences, excluded = {}, [], []
    for pair in cfg.pairs:
        obs = extract_observations(merged, pair[0], pair[1], cfg.window)
        tr = train_pair(obs, cfg.pair_seed(pair), cfg.train, cfg.epsilon)
        trainings[pair] = tr
        try:
            inferences.append(infer_pair(tr, pair, cfg.detector))
        except InsufficientEvidence:
            excluded.append(pair)
    senders = sorted(s for s, _ in cfg.topology.links)
    report = selfishness_scores(inferences, cfg.detector, nodes=senders)
    return Analysis(result, merged, trainings, tuple(inferences), tuple(excluded), report)
