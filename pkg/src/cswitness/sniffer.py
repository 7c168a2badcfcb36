"""Lossy sniffers, trace merging and per-pair observation extraction."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CorruptionError, ValidationError
from .simulator import SimOutput, TransmissionRecord

SYMBOLS = ("i", "x", "y", "xy")
SYMBOL_INDEX = {s: k for k, s in enumerate(SYMBOLS)}
TRACE_FIELDS = ("sniffer_id", "node_id", "packet_id", "attempt", "start_slot", "end_slot")
MERGED_FIELDS = ("node_id", "packet_id", "attempt", "start_slot", "end_slot")


@dataclass(frozen=True)
class SnifferConfig:
    sniffer_id: str
    coverage: frozenset[str]
    loss: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.loss <= 1.0:
            raise ValidationError(f"sniffer {self.sniffer_id}: loss={self.loss} outside [0, 1]")


@dataclass(frozen=True, order=True)
class CapturedRecord:
    """A transmission as seen on air; the delivery outcome is not observable."""

    node_id: str
    packet_id: int
    attempt: int
    start_slot: int
    end_slot: int

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.node_id, self.packet_id, self.attempt)

    @classmethod
    def from_transmission(cls, r: TransmissionRecord) -> "CapturedRecord":
        return cls(r.node_id, r.packet_id, r.attempt, r.start_slot, r.end_slot)


def _sort_key(r: CapturedRecord):
    return (r.start_slot, r.node_id, r.packet_id, r.attempt)


@dataclass(frozen=True)
class CapturedTrace:
    sniffer_id: str
    records: tuple[CapturedRecord, ...]
    total_slots: int


@dataclass(frozen=True)
class MergedTrace:
    records: tuple[CapturedRecord, ...]
    total_slots: int


@dataclass(frozen=True)
class ObservationSequence:
    """Per-slot symbols for the ordered pair ``(x, y)``.

    ``symbols`` are integer codes into :data:`SYMBOLS`; the code of a slot
    is ``x_on + 2 * y_on``.
    """

    pair: tuple[str, str]
    symbols: np.ndarray
    window: tuple[int, int]

    def __post_init__(self):
        first, last = self.window
        if len(self.symbols) != last - first + 1:
            raise ValidationError("observation length does not match its window")

    def labels(self) -> list[str]:
        return [SYMBOLS[s] for s in self.symbols]


def capture(out: SimOutput, cfg: SnifferConfig) -> CapturedTrace:
    """Keep each covered transmission independently with probability ``1 - loss``."""
    cfg.validate()
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    kept = []
    for r in sorted(out.transmissions, key=lambda r: (r.start_slot, r.node_id)):
        if r.node_id not in cfg.coverage:
            continue
        if rng.random() >= cfg.loss:
            kept.append(CapturedRecord.from_transmission(r))
    return CapturedTrace(cfg.sniffer_id, tuple(kept), out.total_slots)


def merge(traces: Sequence[CapturedTrace], total_slots: int | None = None) -> MergedTrace:
    """Union of the traces keyed by ``(node_id, packet_id, attempt)``.

    Assumes all sniffers share the simulation's slot clock.
    """
    if total_slots is None:
        spans = {t.total_slots for t in traces}
        if len(spans) > 1:
            raise CorruptionError(f"traces disagree on the slot span: {sorted(spans)}")
        if not spans:
            raise ValidationError("merge needs at least one trace or an explicit total_slots")
        total_slots = spans.pop()
    by_key: dict[tuple[str, int, int], CapturedRecord] = {}
    for trace in traces:
        for r in trace.records:
            seen = by_key.get(r.key)
            if seen is None:
                by_key[r.key] = r
            elif seen != r:
                raise CorruptionError(
                    f"conflicting slot spans for {r.key}: "
                    f"{seen.start_slot}-{seen.end_slot} vs {r.start_slot}-{r.end_slot}"
                )
    return MergedTrace(tuple(sorted(by_key.values(), key=_sort_key)), total_slots)


def _occupancy(records: Iterable[CapturedRecord], node: str, first: int, last: int) -> np.ndarray:
    on = np.zeros(last - first + 1, dtype=np.int8)
    for r in records:
        if r.node_id != node or r.end_slot < first or r.start_slot > last:
            continue
        on[max(r.start_slot, first) - first: min(r.end_slot, last) - first + 1] = 1
    return on


def extract_observations(
    m: MergedTrace, x: str, y: str, window: tuple[int, int] | None = None
) -> ObservationSequence:
    if x == y:
        raise ValidationError("observation pair needs two distinct nodes")
    first, last = window if window is not None else (0, m.total_slots - 1)
    if not 0 <= first <= last < m.total_slots:
        raise ValidationError(
            f"window {first}-{last} is outside the trace span 0-{m.total_slots - 1}"
        )
    xs = _occupancy(m.records, x, first, last)
    ys = _occupancy(m.records, y, first, last)
    return ObservationSequence((x, y), (xs + 2 * ys).astype(np.int64), (first, last))


def encode_symbols(labels: Iterable[str]) -> np.ndarray:
    try:
        return np.array([SYMBOL_INDEX[s] for s in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValidationError(f"unknown observation symbol {exc.args[0]!r}") from None


# -- file formats -----------------------------------------------------------

def _write(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode("utf-8")


def _read(data: bytes, header) -> list[dict[str, str]]:
    reader = csv.DictReader(io.StringIO(data.decode("utf-8")))
    if tuple(reader.fieldnames or ()) != tuple(header):
        raise ValidationError(f"expected CSV header {','.join(header)}, got {reader.fieldnames}")
    return list(reader)


def _record(row) -> CapturedRecord:
    return CapturedRecord(row["node_id"], int(row["packet_id"]), int(row["attempt"]),
                          int(row["start_slot"]), int(row["end_slot"]))


def trace_to_csv(trace: CapturedTrace) -> bytes:
    return _write(TRACE_FIELDS, ((trace.sniffer_id, r.node_id, r.packet_id, r.attempt,
                                  r.start_slot, r.end_slot) for r in trace.records))


def trace_from_csv(data: bytes, total_slots: int, sniffer_id: str | None = None) -> CapturedTrace:
    rows = _read(data, TRACE_FIELDS)
    ids = {row["sniffer_id"] for row in rows}
    if len(ids) > 1:
        raise ValidationError(f"trace file mixes sniffers {sorted(ids)}")
    sid = ids.pop() if ids else sniffer_id
    if sid is None:
        raise ValidationError("empty trace file and no sniffer id given")
    return CapturedTrace(sid, tuple(_record(row) for row in rows), total_slots)


def merged_to_csv(m: MergedTrace) -> bytes:
    return _write(MERGED_FIELDS, ((r.node_id, r.packet_id, r.attempt, r.start_slot, r.end_slot)
                                  for r in m.records))


def merged_from_csv(data: bytes, total_slots: int) -> MergedTrace:
    return MergedTrace(tuple(_record(row) for row in _read(data, MERGED_FIELDS)), total_slots)


def observations_to_files(obs: ObservationSequence) -> tuple[bytes, bytes]:
    """Return ``(csv, json sidecar)`` bytes for an observation sequence."""
    first = obs.window[0]
    body = _write(("slot", "symbol"), ((first + k, SYMBOLS[s]) for k, s in enumerate(obs.symbols)))
    sidecar = {
        "pair_x": obs.pair[0],
        "pair_y": obs.pair[1],
        "first_slot": obs.window[0],
        "last_slot": obs.window[1],
    }
    return body, (json.dumps(sidecar, indent=2, sort_keys=True) + "\n").encode("utf-8")


def observations_from_files(body: bytes, sidecar: bytes) -> ObservationSequence:
    meta = json.loads(sidecar.decode("utf-8"))
    rows = _read(body, ("slot", "symbol"))
    first, last = int(meta["first_slot"]), int(meta["last_slot"])
    slots = [int(r["slot"]) for r in rows]
    if slots != list(range(first, last + 1)):
        raise ValidationError("observation slots do not cover the sidecar window contiguously")
    return ObservationSequence(
        (meta["pair_x"], meta["pair_y"]), encode_symbols(r["symbol"] for r in rows), (first, last)
    )
