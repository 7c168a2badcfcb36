"""Deferral probabilities, pairwise asymmetry and witness-based scoring."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import InsufficientEvidence, ValidationError
from .hmm.model import TrainResult
from .hmm.template import II, XD, XT, XY, YD, YT

METHODS = ("transitions", "occupancy")


@dataclass(frozen=True)
class DetectorConfig:
    tau_witness: float = 0.1
    tau_selfish: float = 0.3
    k_min: int = 2
    min_evidence_slots: float = 50
    method: str = "transitions"

    def validate(self) -> None:
        for name in ("tau_witness", "tau_selfish"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name}={v} outside [0, 1]")
        if self.k_min < 1:
            raise ValidationError("k_min must be >= 1")
        if self.min_evidence_slots < 0:
            raise ValidationError("min_evidence_slots must be non-negative")
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}")


@dataclass(frozen=True)
class PairInference:
    pair: tuple[str, str]
    d_x: float
    d_y: float
    eta: float
    log_likelihood: float
    evidence_slots: float

    def to_dict(self) -> dict:
        return {
            "x": self.pair[0],
            "y": self.pair[1],
            "d_x": self.d_x,
            "d_y": self.d_y,
            "eta": self.eta,
            "log_likelihood": self.log_likelihood,
            "evidence_slots": self.evidence_slots,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PairInference":
        return cls((d["x"], d["y"]), d["d_x"], d["d_y"], d["eta"],
                   d["log_likelihood"], d["evidence_slots"])


@dataclass(frozen=True)
class NodeScore:
    node_id: str
    score: float
    witnesses: tuple[tuple[str, float], ...]
    flagged: bool


@dataclass(frozen=True)
class SelfishnessReport:
    nodes: tuple[NodeScore, ...]
    pairs: tuple[PairInference, ...] = field(default=())

    def node(self, node_id: str) -> NodeScore:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    @property
    def flagged(self) -> list[str]:
        return [n.node_id for n in self.nodes if n.flagged]

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {
                    "node_id": n.node_id,
                    "score": n.score,
                    "witnesses": [{"node_id": w, "eta": e} for w, e in n.witnesses],
                    "flagged": n.flagged,
                }
                for n in self.nodes
            ],
            "pairs": [p.to_dict() for p in self.pairs],
        }

    def to_json(self) -> bytes:
        return (json.dumps(self.to_dict(), indent=2) + "\n").encode("utf-8")


def evidence_slots(tr: TrainResult) -> float:
    c = tr.occupancy
    return float(c[XD] + c[YD] + c[XY])


def _ratio(num: float, den: float, who: str) -> float:
    if den <= 0:
        raise InsufficientEvidence(f"no contention episodes observed for {who}")
    return float(min(1.0, max(0.0, num / den)))


def deferral_probabilities(
    tr: TrainResult, min_evidence_slots: float = 50, method: str = "transitions"
) -> tuple[float, float]:
    """``(d_x, d_y)``: how often x defers for y, and y for x.

    ``occupancy`` takes, among contended slots, the share spent deferring:
    ``C(Xd) / (C(Xd) + C(XY))``.  ``transitions`` counts decisions instead
    of slots: an encounter ends either in the deferral state or, when the
    carrier is ignored, the non-deferring run exits elsewhere; so
    ``d_x = E[->Xd] / (E[->Xd] + E[YT -> II, XT, XY])`` with entries into
    Xd from s_YT or s_XY.  Either way a direction whose contended slots
    ``C(Xd) + C(XY)`` fall below ``min_evidence_slots`` is rejected.
    """
    c, n = tr.occupancy, tr.transitions
    for who, defer in (("x", XD), ("y", YD)):
        den = c[defer] + c[XY]
        if den <= 0 or den < min_evidence_slots:
            raise InsufficientEvidence(
                f"only {den:.1f} contended slots for {who} (need {min_evidence_slots})"
            )
    if method == "occupancy":
        return (
            _ratio(c[XD], c[XD] + c[XY], "x"),
            _ratio(c[YD], c[YD] + c[XY], "y"),
        )
    if method != "transitions":
        raise ValidationError(f"unknown method {method!r}")
    defer_x = n[YT, XD] + n[XY, XD]
    ignore_x = n[YT, II] + n[YT, XT] + n[YT, XY]
    defer_y = n[XT, YD] + n[XY, YD]
    ignore_y = n[XT, II] + n[XT, YT] + n[XT, XY]
    return (
        _ratio(defer_x, defer_x + ignore_x, "x"),
        _ratio(defer_y, defer_y + ignore_y, "y"),
    )


def asymmetry(d_x: float, d_y: float) -> float:
    """Positive when y defers to x more than x defers to y (x is suspect)."""
    for v in (d_x, d_y):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"deferral probability {v} outside [0, 1]")
    return d_y - d_x


def infer_pair(tr: TrainResult, pair: tuple[str, str], cfg: DetectorConfig = DetectorConfig()) -> PairInference:
    d_x, d_y = deferral_probabilities(tr, cfg.min_evidence_slots, cfg.method)
    return PairInference(pair, d_x, d_y, asymmetry(d_x, d_y), float(tr.log_likelihood),
                         evidence_slots(tr))


def selfishness_scores(
    inferences: list[PairInference],
    cfg: DetectorConfig = DetectorConfig(),
    nodes: list[str] | None = None,
) -> SelfishnessReport:
    """Average the positive asymmetries accusing each node.

    A pair ``(x, y)`` with asymmetry ``eta`` accuses x by ``eta`` and y by
    ``-eta``.  Witnesses of x are the nodes whose accusation exceeds
    ``tau_witness``.  ``nodes`` adds nodes that appear in no scored pair.
    """
    cfg.validate()
    seen = set()
    accusations: dict[str, list[tuple[str, float]]] = {n: [] for n in (nodes or [])}
    for p in inferences:
        x, y = p.pair
        key = frozenset(p.pair)
        if x == y or key in seen:
            raise ValidationError(f"duplicate or degenerate pair {p.pair}")
        seen.add(key)
        accusations.setdefault(x, []).append((y, p.eta))
        accusations.setdefault(y, []).append((x, -p.eta))
    scores = []
    for node in sorted(accusations):
        etas = sorted(accusations[node])
        positive = [e for _, e in etas if e > 0]
        score = float(sum(positive) / len(positive)) if positive else 0.0
        witnesses = tuple((w, float(e)) for w, e in etas if e > cfg.tau_witness)
        flagged = bool(score > cfg.tau_selfish and len(witnesses) >= cfg.k_min)
        scores.append(NodeScore(node, score, witnesses, flagged))
    pairs = tuple(sorted(inferences, key=lambda p: p.pair))
    return SelfishnessReport(tuple(scores), pairs)


def report_from_json(data: bytes) -> SelfishnessReport:
    d = json.loads(data.decode("utf-8"))
    nodes = tuple(
        NodeScore(n["node_id"], n["score"],
                  tuple((w["node_id"], w["eta"]) for w in n["witnesses"]), n["flagged"])
        for n in d["nodes"]
    )
    return SelfishnessReport(nodes, tuple(PairInference.from_dict(p) for p in d["pairs"]))
