"""Scenario configuration: JSON parsing, validation and seed derivation.

Per-component seeds come from one master seed by index offset, modulo
2**64: the simulator uses ``master``, sniffer ``k`` (in config order)
``master + 1 + k``, and pair ``j`` (in sorted pair order)
``master + 1 + n_sniffers + j`` for both its template jitter and training.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Any

from .detector import METHODS, DetectorConfig
from .errors import ValidationError
from .hmm.model import TrainConfig
from .simulator import SATURATED, NodeConfig, SimConfig, Topology
from .sniffer import SnifferConfig

SEED_MOD = 2**64
ID_RE = re.compile(r"^[A-Za-z0-9.-]+$")

DEFAULT_EPSILON = 0.02
DEFAULT_BUCKET_SLOTS = 1000
DEFAULT_SLOT_SECONDS = 20e-6


@dataclass(frozen=True)
class ScenarioConfig:
    topology: Topology
    nodes: tuple[NodeConfig, ...]
    sim: SimConfig
    sniffers: tuple[SnifferConfig, ...]
    train: TrainConfig
    detector: DetectorConfig
    pairs: tuple[tuple[str, str], ...]
    window: tuple[int, int]
    epsilon: float = DEFAULT_EPSILON
    bucket_slots: int = DEFAULT_BUCKET_SLOTS
    slot_seconds: float = DEFAULT_SLOT_SECONDS
    output_dir: str | None = None
    seed: int = 0
    source_sha256: str = ""
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def pair_seed(self, pair: tuple[str, str]) -> int:
        j = self.pairs.index(pair)
        return (self.seed + 1 + len(self.sniffers) + j) % SEED_MOD


class _Errors:
    def __init__(self):
        self.items: list[tuple[str, str]] = []

    def add(self, path: str, msg: str) -> None:
        self.items.append((path, msg))

    def raise_if_any(self) -> None:
        if self.items:
            text = "; ".join(f"{p}: {m}" for p, m in self.items)
            raise ValidationError(f"invalid config: {text}", self.items)


def _keys(obj: Any, path: str, allowed: set[str], required: set[str], err: _Errors) -> bool:
    if not isinstance(obj, dict):
        err.add(path or "$", "expected an object")
        return False
    for k in sorted(set(obj) - allowed):
        err.add(f"{path}.{k}" if path else k, "unknown key")
    missing = sorted(required - set(obj))
    for k in missing:
        err.add(f"{path}.{k}" if path else k, "missing required field")
    return not missing


def _num(obj: dict, key: str, path: str, err: _Errors, default, *, lo=None, hi=None,
         integer=False, lo_open=False):
    if key not in obj:
        return default
    v = obj[key]
    where = f"{path}.{key}" if path else key
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and not isinstance(v, int)):
        err.add(where, "expected an integer" if integer else "expected a number")
        return default
    if lo is not None and (v <= lo if lo_open else v < lo):
        err.add(where, f"{v} is below the allowed minimum {lo}")
    elif hi is not None and v > hi:
        err.add(where, f"{v} is above the allowed maximum {hi}")
    return v


def _id_pair(v: Any, where: str, ids: set[str], err: _Errors) -> tuple[str, str] | None:
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(s, str) for s in v)):
        err.add(where, "expected a pair of node ids")
        return None
    x, y = v
    unknown = [s for s in (x, y) if s not in ids]
    if unknown:
        err.add(where, f"pair ({x}, {y}) references unknown node id(s) {unknown}")
        return None
    if x == y:
        err.add(where, f"pair ({x}, {y}) repeats a node")
        return None
    return (x, y)


def parse_config(data: bytes, seed_override: int | None = None) -> ScenarioConfig:
    """Parse and validate a UTF-8 JSON scenario; raises :class:`ValidationError`."""
    try:
        raw = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"config is not valid UTF-8 JSON: {exc}", [("$", str(exc))]) from None
    return build_config(raw, seed_override, hashlib.sha256(data).hexdigest())


def build_config(raw: Any, seed_override: int | None = None, source_sha256: str = "") -> ScenarioConfig:
    err = _Errors()
    top_keys = {"seed", "topology", "nodes", "sim", "sniffers", "train", "detector", "pairs",
                "window", "bucket_slots", "slot_seconds", "output_dir"}
    if not isinstance(raw, dict):
        raise ValidationError("invalid config: $: expected an object", [("$", "expected an object")])
    _keys(raw, "", top_keys, {"topology", "sim"}, err)

    seed = _num(raw, "seed", "", err, 0, lo=0, hi=SEED_MOD - 1, integer=True)
    if seed_override is not None:
        if not 0 <= seed_override < SEED_MOD:
            err.add("seed", "override must be a 64-bit unsigned integer")
        seed = seed_override

    # topology
    topo_raw = raw.get("topology")
    ids: list[str] = []
    defer: set[tuple[str, str]] = set()
    links: list[tuple[str, str]] = []
    interferers: dict[tuple[str, str], frozenset[str]] = {}
    if topo_raw is not None and _keys(topo_raw, "topology", {"nodes", "defer_set", "links", "interferers"},
             {"nodes", "links"}, err):
        nodes_v = topo_raw.get("nodes", [])
        if not isinstance(nodes_v, list) or not nodes_v:
            err.add("topology.nodes", "expected a non-empty list of node ids")
        else:
            for k, nid in enumerate(nodes_v):
                if not isinstance(nid, str) or not ID_RE.match(nid):
                    err.add(f"topology.nodes[{k}]", "node ids must match [A-Za-z0-9.-]+")
                elif nid in ids:
                    err.add(f"topology.nodes[{k}]", f"duplicate node id {nid}")
                else:
                    ids.append(nid)
        idset = set(ids)
        dv = topo_raw.get("defer_set", "all")
        if dv == "all":
            defer = {(x, y) for x in ids for y in ids if x != y}
        elif isinstance(dv, list):
            for k, p in enumerate(dv):
                pair = _id_pair(p, f"topology.defer_set[{k}]", idset, err)
                if pair:
                    defer.add(pair)
        else:
            err.add("topology.defer_set", "expected \"all\" or a list of [x, y] pairs")
        lv = topo_raw.get("links", [])
        if not isinstance(lv, list):
            err.add("topology.links", "expected a list of [sender, receiver] pairs")
        else:
            senders = set()
            for k, p in enumerate(lv):
                pair = _id_pair(p, f"topology.links[{k}]", idset, err)
                if pair:
                    if pair[0] in senders:
                        err.add(f"topology.links[{k}]", f"node {pair[0]} already sends on another link")
                    senders.add(pair[0])
                    links.append(pair)
        iv = topo_raw.get("interferers", [])
        if not isinstance(iv, list):
            err.add("topology.interferers", "expected a list")
        else:
            for k, entry in enumerate(iv):
                where = f"topology.interferers[{k}]"
                if not _keys(entry, where, {"link", "nodes"}, {"link", "nodes"}, err):
                    continue
                link = _id_pair(entry["link"], f"{where}.link", idset, err)
                if link and link not in links:
                    err.add(f"{where}.link", f"({link[0]}, {link[1]}) is not a configured link")
                members = entry["nodes"]
                if not isinstance(members, list) or any(m not in idset for m in members):
                    err.add(f"{where}.nodes", "expected a list of known node ids")
                elif link:
                    interferers[link] = frozenset(members)

    # nodes
    node_cfgs: dict[str, NodeConfig] = {}
    nv = raw.get("nodes", [])
    if not isinstance(nv, list):
        err.add("nodes", "expected a list")
        nv = []
    for k, entry in enumerate(nv):
        where = f"nodes[{k}]"
        if not _keys(entry, where, {"node_id", "p_s", "arrival", "cw", "retry_limit"}, {"node_id"}, err):
            continue
        nid = entry.get("node_id")
        if nid not in set(ids):
            err.add(f"{where}.node_id", f"unknown node id {nid!r}")
            continue
        if nid in node_cfgs:
            err.add(f"{where}.node_id", f"duplicate entry for {nid}")
            continue
        p_s = _num(entry, "p_s", where, err, 0.0, lo=0.0, hi=1.0)
        arrival = entry.get("arrival", SATURATED)
        if arrival != SATURATED:
            arrival = _num(entry, "arrival", where, err, SATURATED, lo=0.0, hi=1.0)
        cw = _num(entry, "cw", where, err, 16, lo=1, integer=True)
        retry = _num(entry, "retry_limit", where, err, 4, lo=0, integer=True)
        node_cfgs[nid] = NodeConfig(nid, float(p_s), arrival, cw, retry)
    nodes = tuple(node_cfgs.get(nid, NodeConfig(nid)) for nid in ids)

    # sim
    sim = None
    sv = raw.get("sim")
    if sv is not None and _keys(sv, "sim", {"total_slots", "packet_len", "packet_bytes"}, {"total_slots"}, err):
        total = _num(sv, "total_slots", "sim", err, 1, lo=1, integer=True)
        plen = _num(sv, "packet_len", "sim", err, 20, lo=1, integer=True)
        pbytes = _num(sv, "packet_bytes", "sim", err, 1000, lo=1, integer=True)
        if total < plen:
            err.add("sim.total_slots", f"{total} is shorter than packet_len {plen}")
        sim = SimConfig(total, plen, pbytes, seed)

    # sniffers
    sniffers: list[SnifferConfig] = []
    snv = raw.get("sniffers", [{"sniffer_id": "s0"}])
    if not isinstance(snv, list) or not snv:
        err.add("sniffers", "expected a non-empty list")
        snv = []
    for k, entry in enumerate(snv):
        where = f"sniffers[{k}]"
        if not _keys(entry, where, {"sniffer_id", "coverage", "loss"}, {"sniffer_id"}, err):
            continue
        sid = entry["sniffer_id"]
        if not isinstance(sid, str) or not ID_RE.match(sid):
            err.add(f"{where}.sniffer_id", "sniffer ids must match [A-Za-z0-9.-]+")
            continue
        if any(s.sniffer_id == sid for s in sniffers):
            err.add(f"{where}.sniffer_id", f"duplicate sniffer id {sid}")
            continue
        cov = entry.get("coverage", "all")
        if cov == "all":
            cov = list(ids)
        elif not isinstance(cov, list) or any(c not in set(ids) for c in cov):
            err.add(f"{where}.coverage", "expected \"all\" or a list of known node ids")
            cov = []
        loss = _num(entry, "loss", where, err, 0.0, lo=0.0, hi=1.0)
        sniffers.append(SnifferConfig(sid, frozenset(cov), float(loss), (seed + 1 + k) % SEED_MOD))

    # training
    tv = raw.get("train", {})
    train = TrainConfig()
    epsilon = DEFAULT_EPSILON
    if _keys(tv, "train", {"max_iters", "tol", "restarts", "freeze_emissions", "epsilon"}, set(), err):
        fe = tv.get("freeze_emissions", True)
        if not isinstance(fe, bool):
            err.add("train.freeze_emissions", "expected a boolean")
            fe = True
        train = TrainConfig(
            _num(tv, "max_iters", "train", err, 100, lo=1, integer=True),
            float(_num(tv, "tol", "train", err, 1e-4, lo=0.0, lo_open=True)),
            _num(tv, "restarts", "train", err, 3, lo=1, integer=True),
            fe,
        )
        epsilon = float(_num(tv, "epsilon", "train", err, DEFAULT_EPSILON, lo=0.0, hi=0.4999))

    # detector
    dv = raw.get("detector", {})
    detector = DetectorConfig()
    if _keys(dv, "detector", {"tau_witness", "tau_selfish", "k_min", "min_evidence_slots", "method"},
             set(), err):
        method = dv.get("method", "transitions")
        if method not in METHODS:
            err.add("detector.method", f"expected one of {list(METHODS)}")
            method = "transitions"
        detector = DetectorConfig(
            float(_num(dv, "tau_witness", "detector", err, 0.1, lo=0.0, hi=1.0)),
            float(_num(dv, "tau_selfish", "detector", err, 0.3, lo=0.0, hi=1.0)),
            _num(dv, "k_min", "detector", err, 2, lo=1, integer=True),
            _num(dv, "min_evidence_slots", "detector", err, 50, lo=0),
            method,
        )

    # pairs
    link_senders = sorted(s for s, _ in links)
    pv = raw.get("pairs")
    pairs: list[tuple[str, str]] = []
    if pv is None:
        pairs = list(combinations(link_senders, 2))
    elif not isinstance(pv, list):
        err.add("pairs", "expected a list of [x, y] pairs")
    else:
        for k, p in enumerate(pv):
            pair = _id_pair(p, f"pairs[{k}]", set(ids), err)
            if pair:
                pair = tuple(sorted(pair))
                if pair in pairs:
                    err.add(f"pairs[{k}]", f"pair {pair} listed twice")
                pairs.append(pair)
        pairs.sort()

    # window and metrics
    window = (0, sim.total_slots - 1) if sim else (0, 0)
    if "window" in raw:
        w = raw["window"]
        if not (isinstance(w, list) and len(w) == 2 and all(isinstance(v, int) and not isinstance(v, bool)
                                                            for v in w)):
            err.add("window", "expected [first_slot, last_slot]")
        elif sim and not 0 <= w[0] <= w[1] < sim.total_slots:
            err.add("window", f"{w} is outside 0-{sim.total_slots - 1}")
        else:
            window = (w[0], w[1])
    bucket = _num(raw, "bucket_slots", "", err, DEFAULT_BUCKET_SLOTS, lo=1, integer=True)
    slot_seconds = float(_num(raw, "slot_seconds", "", err, DEFAULT_SLOT_SECONDS, lo=0.0, lo_open=True))
    out_dir = raw.get("output_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        err.add("output_dir", "expected a string")

    err.raise_if_any()
    topology = Topology(tuple(ids), frozenset(defer), tuple(links), interferers)
    return ScenarioConfig(
        topology=topology,
        nodes=nodes,
        sim=sim,
        sniffers=tuple(sniffers),
        train=replace(train, seed=0),
        detector=detector,
        pairs=tuple(pairs),
        window=window,
        epsilon=epsilon,
        bucket_slots=bucket,
        slot_seconds=slot_seconds,
        output_dir=out_dir,
        seed=seed,
        source_sha256=source_sha256,
        raw=raw,
    )
