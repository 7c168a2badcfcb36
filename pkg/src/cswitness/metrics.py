"""Throughput, packet delivery ratio and delay, plus per-bucket series.

``throughput`` keeps the literal ``bytes / seconds * 1000`` form, so its
unit is thousands of bytes per second scaled up, not bytes per second.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .errors import ValidationError
from .simulator import SimOutput

SERIES_FIELDS = ("bucket_start_slot", "packets_sent", "packets_received", "pdr",
                 "bytes_delivered", "throughput", "mean_delay_slots")


def throughput(n_bytes: float, interval: float) -> float:
    if n_bytes < 0:
        raise ValidationError("byte count must be non-negative")
    if not interval > 0:
        raise ValidationError("interval must be positive")
    return n_bytes / interval * 1000


def pdr(received: int, sent: int) -> float:
    if sent <= 0:
        raise ValidationError("packet delivery ratio is undefined when nothing was sent")
    if received < 0 or received > sent:
        raise ValidationError(f"received={received} must lie in [0, sent={sent}]")
    return received / sent


def transmission_delay(n_bits: float, rate: float) -> float:
    """Seconds to push ``n_bits`` onto a link running at ``rate`` bit/s."""
    if not (n_bits > 0 and rate > 0):
        raise ValidationError("n_bits and rate must be positive")
    return n_bits / rate


@dataclass(frozen=True)
class MetricSample:
    bucket_start_slot: int
    bytes_delivered: int
    packets_sent: int
    packets_received: int
    mean_delivery_delay_slots: float


def _packets(out: SimOutput):
    """Yield ``(node, packet_id, attribution_slot, delay or None)`` per packet.

    Completed packets (delivered or dropped) are attributed to their
    completion slot; packets still in flight at the end to the start of
    their first attempt.  Delay counts slots from arrival to completion,
    both ends inclusive.
    """
    done = set()
    for (sender, _), items in out.deliveries.items():
        for d in items:
            done.add((sender, d.packet_id))
            delay = d.completion_slot - d.arrival_slot + 1 if d.delivered else None
            yield sender, d.packet_id, d.completion_slot, delay
    for r in out.transmissions:
        if r.attempt == 1 and (r.node_id, r.packet_id) not in done:
            yield r.node_id, r.packet_id, r.start_slot, None


def time_series(out: SimOutput, bucket_slots: int, packet_bytes: int | None = None) -> list[MetricSample]:
    if bucket_slots < 1:
        raise ValidationError("bucket_slots must be >= 1")
    size = out.packet_bytes if packet_bytes is None else packet_bytes
    n_buckets = -(-out.total_slots // bucket_slots)
    sent = [0] * n_buckets
    received = [0] * n_buckets
    delay_sum = [0] * n_buckets
    for _, _, slot, delay in _packets(out):
        k = slot // bucket_slots
        sent[k] += 1
        if delay is not None:
            received[k] += 1
            delay_sum[k] += delay
    return [
        MetricSample(
            k * bucket_slots,
            received[k] * size,
            sent[k],
            received[k],
            delay_sum[k] / received[k] if received[k] else 0.0,
        )
        for k in range(n_buckets)
    ]


def summary(out: SimOutput) -> dict:
    """Whole-run totals: packets sent/received, PDR and mean delay in slots."""
    sent = received = delay_sum = 0
    for _, _, _, delay in _packets(out):
        sent += 1
        if delay is not None:
            received += 1
            delay_sum += delay
    return {
        "packets_sent": sent,
        "packets_received": received,
        "pdr": pdr(received, sent) if sent else 0.0,
        "mean_delay_slots": delay_sum / received if received else 0.0,
    }


def series_to_csv(samples: list[MetricSample], bucket_slots: int, slot_seconds: float) -> bytes:
    """Undefined ratios (no packets in a bucket) are written as 0."""
    interval = bucket_slots * slot_seconds
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_FIELDS)
    for s in samples:
        w.writerow((
            s.bucket_start_slot,
            s.packets_sent,
            s.packets_received,
            repr(pdr(s.packets_received, s.packets_sent)) if s.packets_sent else "0.0",
            s.bytes_delivered,
            repr(throughput(s.bytes_delivered, interval)),
            repr(s.mean_delivery_delay_slots),
        ))
    return buf.getvalue().encode("utf-8")
