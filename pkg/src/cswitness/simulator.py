"""Slotted CSMA/CA simulator with probabilistic carrier-sense defeat.

Time advances in abstract slots.  Every sender with a head-of-line packet
draws a backoff uniformly from ``[0, cw)`` and counts it down on slots it
perceives idle.  A neighbour's transmission is perceivable from the slot
after it starts; the first time a sender meets a given busy period it rolls
once to decide whether it honours the carrier (probability ``1 - p_s``) or
ignores it for the rest of that busy period.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ValidationError

SATURATED = "saturated"

TRANSMISSION_FIELDS = ("node_id", "packet_id", "attempt", "start_slot", "end_slot", "success")
DELIVERY_FIELDS = ("sender", "receiver", "packet_id", "arrival_slot", "completion_slot", "delivered")
DEFERRAL_FIELDS = ("deferrer", "transmitter", "slot", "deferred")


@dataclass(frozen=True)
class Topology:
    """Static single-hop topology.

    ``defer_pairs`` holds ordered ``(x, y)`` pairs meaning *x can hear y's
    carrier*.  ``interferers`` maps a link ``(sender, receiver)`` to the set
    of nodes whose overlapping transmissions corrupt that reception; links
    missing from the mapping default to every other node, the receiver
    included (half duplex).
    """

    node_ids: tuple[str, ...]
    defer_pairs: frozenset[tuple[str, str]]
    links: tuple[tuple[str, str], ...]
    interferers: Mapping[tuple[str, str], frozenset[str]] = field(default_factory=dict)

    @classmethod
    def clique(cls, node_ids: Iterable[str], links: Iterable[tuple[str, str]]) -> "Topology":
        ids = tuple(node_ids)
        pairs = frozenset((x, y) for x in ids for y in ids if x != y)
        return cls(ids, pairs, tuple(links))

    def can_hear(self, x: str, y: str) -> bool:
        return (x, y) in self.defer_pairs

    def interferers_of(self, sender: str, receiver: str) -> frozenset[str]:
        if (sender, receiver) in self.interferers:
            return self.interferers[(sender, receiver)]
        return frozenset(n for n in self.node_ids if n != sender)

    def validate(self) -> None:
        ids = set(self.node_ids)
        if len(ids) != len(self.node_ids):
            raise ValidationError("duplicate node ids in topology")
        for x, y in self.defer_pairs:
            if x not in ids or y not in ids:
                raise ValidationError(f"defer pair ({x}, {y}) references an unknown node")
            if x == y:
                raise ValidationError(f"defer pair ({x}, {y}) is reflexive")
        senders = set()
        for s, r in self.links:
            if s not in ids or r not in ids:
                raise ValidationError(f"link ({s}, {r}) references an unknown node")
            if s == r:
                raise ValidationError(f"link ({s}, {r}) is a self loop")
            if s in senders:
                raise ValidationError(f"node {s} is the sender of more than one link")
            senders.add(s)
        for (s, r), members in self.interferers.items():
            if (s, r) not in self.links:
                raise ValidationError(f"interferer set given for unknown link ({s}, {r})")
            unknown = set(members) - ids
            if unknown:
                raise ValidationError(f"interferer set of ({s}, {r}) has unknown nodes {sorted(unknown)}")


@dataclass(frozen=True)
class NodeConfig:
    node_id: str
    p_s: float = 0.0
    arrival: str | float = SATURATED
    cw: int = 16
    retry_limit: int = 4

    def validate(self) -> None:
        if not 0.0 <= self.p_s <= 1.0:
            raise ValidationError(f"node {self.node_id}: p_s={self.p_s} outside [0, 1]")
        if self.arrival != SATURATED:
            if isinstance(self.arrival, str) or not 0.0 <= float(self.arrival) <= 1.0:
                raise ValidationError(f"node {self.node_id}: arrival must be 'saturated' or in [0, 1]")
        if int(self.cw) != self.cw or self.cw < 1:
            raise ValidationError(f"node {self.node_id}: cw must be a positive integer")
        if int(self.retry_limit) != self.retry_limit or self.retry_limit < 0:
            raise ValidationError(f"node {self.node_id}: retry_limit must be a non-negative integer")


@dataclass(frozen=True)
class SimConfig:
    total_slots: int
    packet_len: int = 20
    packet_bytes: int = 1000
    seed: int = 0

    def validate(self) -> None:
        if self.total_slots < 1 or self.packet_len < 1 or self.packet_bytes < 1:
            raise ValidationError("total_slots, packet_len and packet_bytes must be positive")
        if self.total_slots < self.packet_len:
            raise ValidationError(
                f"total_slots={self.total_slots} is shorter than packet_len={self.packet_len}"
            )
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, order=True)
class TransmissionRecord:
    node_id: str
    packet_id: int
    attempt: int
    start_slot: int
    end_slot: int
    success: bool

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.node_id, self.packet_id, self.attempt)


@dataclass(frozen=True)
class DeferralEvent:
    deferrer: str
    transmitter: str
    slot: int
    deferred: bool


@dataclass(frozen=True)
class Delivery:
    packet_id: int
    arrival_slot: int
    completion_slot: int
    delivered: bool


@dataclass(frozen=True)
class SimOutput:
    transmissions: tuple[TransmissionRecord, ...]
    deferral_events: tuple[DeferralEvent, ...]
    deliveries: Mapping[tuple[str, str], tuple[Delivery, ...]]
    total_slots: int
    packet_len: int = 1
    packet_bytes: int = 1

    @classmethod
    def empty(cls, total_slots: int, packet_len: int = 1, packet_bytes: int = 1) -> "SimOutput":
        return cls((), (), {}, total_slots, packet_len, packet_bytes)


class _Sender:
    __slots__ = ("cfg", "receiver", "queue", "next_packet_id", "attempt", "backoff",
                 "tx_start", "tx_end", "decisions", "records")

    def __init__(self, cfg: NodeConfig, receiver: str | None):
        self.cfg = cfg
        self.receiver = receiver
        self.queue: deque[tuple[int, int]] = deque()
        self.next_packet_id = 0
        self.attempt = 1
        self.backoff: int | None = None
        self.tx_start = -1
        self.tx_end = -1
        # neighbour -> (busy-period start slot, honoured?)
        self.decisions: dict[str, tuple[int, bool]] = {}
        self.records: list[TransmissionRecord] = []

    def transmitting(self, t: int) -> bool:
        return self.tx_start <= t <= self.tx_end


def _validate_inputs(topology: Topology, nodes: list[NodeConfig], sim: SimConfig) -> dict[str, NodeConfig]:
    topology.validate()
    sim.validate()
    by_id: dict[str, NodeConfig] = {}
    for n in nodes:
        n.validate()
        if n.node_id in by_id:
            raise ValidationError(f"duplicate NodeConfig for {n.node_id}")
        by_id[n.node_id] = n
    unknown = set(by_id) - set(topology.node_ids)
    missing = set(topology.node_ids) - set(by_id)
    if unknown:
        raise ValidationError(f"NodeConfig for unknown node(s) {sorted(unknown)}")
    if missing:
        raise ValidationError(f"no NodeConfig for node(s) {sorted(missing)}")
    return by_id


def run_simulation(topology: Topology, nodes: list[NodeConfig], sim: SimConfig) -> SimOutput:
    """Run the slotted simulation; a pure function of its arguments."""
    by_id = _validate_inputs(topology, nodes, sim)
    rng = np.random.Generator(np.random.PCG64(sim.seed))
    order = sorted(topology.node_ids)
    link_of = {s: r for s, r in topology.links}
    senders = {nid: _Sender(by_id[nid], link_of.get(nid)) for nid in order}
    active = [nid for nid in order if senders[nid].receiver is not None]
    heard = {x: [y for y in order if topology.can_hear(x, y) and y in link_of] for x in order}
    interf = {s: sorted(topology.interferers_of(s, r)) for s, r in topology.links}
    L = sim.packet_len
    events: list[DeferralEvent] = []
    deliveries: dict[tuple[str, str], list[Delivery]] = {link: [] for link in topology.links}

    for t in range(sim.total_slots):
        for nid in active:
            s = senders[nid]
            arrival = s.cfg.arrival
            if arrival == SATURATED:
                if not s.queue:
                    s.queue.append((s.next_packet_id, t))
                    s.next_packet_id += 1
            elif rng.random() < float(arrival):
                s.queue.append((s.next_packet_id, t))
                s.next_packet_id += 1

        starting = []
        for nid in active:
            s = senders[nid]
            if not s.queue or s.transmitting(t):
                continue
            if s.backoff is None:
                s.backoff = int(rng.integers(0, s.cfg.cw))
            busy = False
            for y in heard[nid]:
                other = senders[y]
                if not (other.tx_start < t <= other.tx_end):
                    continue
                seen = s.decisions.get(y)
                if seen is None or seen[0] != other.tx_start:
                    honour = bool(rng.random() < 1.0 - s.cfg.p_s)
                    seen = (other.tx_start, honour)
                    s.decisions[y] = seen
                    events.append(DeferralEvent(nid, y, t, honour))
                busy = busy or seen[1]
            if busy:
                continue
            if s.backoff == 0:
                if t + L <= sim.total_slots:
                    starting.append(s)
            else:
                s.backoff -= 1

        for s in starting:
            s.tx_start, s.tx_end = t, t + L - 1

        for nid in active:
            s = senders[nid]
            if s.tx_end != t:
                continue
            ok = not any(_overlaps(senders[i].records, senders[i], s.tx_start, t) for i in interf[nid]
                         if i in senders)
            packet_id, arrived = s.queue[0]
            s.records.append(TransmissionRecord(nid, packet_id, s.attempt, s.tx_start, t, ok))
            s.backoff = None
            if ok or s.attempt > s.cfg.retry_limit:
                s.queue.popleft()
                deliveries[(nid, s.receiver)].append(Delivery(packet_id, arrived, t, ok))
                s.attempt = 1
            else:
                s.attempt += 1

    records = sorted(
        (r for s in senders.values() for r in s.records), key=lambda r: (r.start_slot, r.node_id)
    )
    return SimOutput(
        tuple(records),
        tuple(events),
        {k: tuple(v) for k, v in deliveries.items()},
        sim.total_slots,
        sim.packet_len,
        sim.packet_bytes,
    )


def _overlaps(records: list[TransmissionRecord], sender: _Sender, start: int, end: int) -> bool:
    # The interferer's current transmission may not be finalised yet.
    if sender.tx_start <= end and sender.tx_end >= start:
        return True
    for r in reversed(records):
        if r.end_slot < start:
            break
        if r.start_slot <= end:
            return True
    return False


def ground_truth_deferral(out: SimOutput, x: str, y: str) -> float | None:
    """Fraction of x's encounters with y's busy periods in which x deferred.

    Returns ``None`` when x never encountered a busy period of y.
    """
    n = honoured = 0
    for ev in out.deferral_events:
        if ev.deferrer == x and ev.transmitter == y:
            n += 1
            honoured += ev.deferred
    if n == 0:
        return None
    return honoured / n


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode("utf-8")


def _csv_rows(data: bytes, header) -> list[dict[str, str]]:
    reader = csv.DictReader(io.StringIO(data.decode("utf-8")))
    if tuple(reader.fieldnames or ()) != tuple(header):
        raise ValidationError(f"expected CSV header {','.join(header)}, got {reader.fieldnames}")
    return list(reader)


def transmissions_to_csv(out: SimOutput) -> bytes:
    rows = sorted(out.transmissions, key=lambda r: (r.start_slot, r.node_id))
    return _csv_bytes(
        TRANSMISSION_FIELDS,
        ((r.node_id, r.packet_id, r.attempt, r.start_slot, r.end_slot, int(r.success)) for r in rows),
    )


def transmissions_from_csv(data: bytes) -> list[TransmissionRecord]:
    return [
        TransmissionRecord(
            row["node_id"], int(row["packet_id"]), int(row["attempt"]),
            int(row["start_slot"]), int(row["end_slot"]), row["success"] == "1",
        )
        for row in _csv_rows(data, TRANSMISSION_FIELDS)
    ]


def deliveries_to_csv(out: SimOutput) -> bytes:
    rows = []
    for (s, r) in sorted(out.deliveries):
        for d in out.deliveries[(s, r)]:
            rows.append((s, r, d.packet_id, d.arrival_slot, d.completion_slot, int(d.delivered)))
    return _csv_bytes(DELIVERY_FIELDS, rows)


def deliveries_from_csv(data: bytes) -> dict[tuple[str, str], tuple[Delivery, ...]]:
    out: dict[tuple[str, str], list[Delivery]] = {}
    for row in _csv_rows(data, DELIVERY_FIELDS):
        out.setdefault((row["sender"], row["receiver"]), []).append(
            Delivery(int(row["packet_id"]), int(row["arrival_slot"]),
                     int(row["completion_slot"]), row["delivered"] == "1")
        )
    return {k: tuple(v) for k, v in out.items()}


def deferrals_to_csv(out: SimOutput) -> bytes:
    return _csv_bytes(
        DEFERRAL_FIELDS,
        ((e.deferrer, e.transmitter, e.slot, int(e.deferred)) for e in out.deferral_events),
    )


def deferrals_from_csv(data: bytes) -> list[DeferralEvent]:
    return [
        DeferralEvent(row["deferrer"], row["transmitter"], int(row["slot"]), row["deferred"] == "1")
        for row in _csv_rows(data, DEFERRAL_FIELDS)
    ]
