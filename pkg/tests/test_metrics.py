import csv
import io
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import pair_run
from cswitness.errors import ValidationError
from cswitness.metrics import (
    SERIES_FIELDS,
    pdr,
    series_to_csv,
    summary,
    throughput,
    time_series,
    transmission_delay,
)
from cswitness.simulator import SimOutput


def test_throughput_literal_formula():
    assert throughput(500, 1) == 500_000
    assert throughput(0, 3) == 0
    assert throughput(1024, 2) == 512_000


@pytest.mark.parametrize("interval", [0, -1])
def test_throughput_needs_positive_interval(interval):
    with pytest.raises(ValidationError):
        throughput(10, interval)


def test_pdr_examples():
    assert pdr(90, 100) == 0.9
    assert pdr(100, 100) == 1.0
    assert pdr(0, 50) == 0.0


@pytest.mark.parametrize("received, sent", [(0, 0), (5, 4), (-1, 3)])
def test_pdr_errors(received, sent):
    with pytest.raises(ValidationError):
        pdr(received, sent)


def test_delay_examples():
    assert transmission_delay(8000, 1_000_000) == 0.008
    assert transmission_delay(1, 1) == 1.0


@given(st.integers(1, 10**9), st.integers(1, 10**9))
def test_delay_is_linear(n, r):
    assert transmission_delay(2 * n, r) == 2 * transmission_delay(n, r)
    assert transmission_delay(n, 2 * r) == transmission_delay(n, r) / 2


@pytest.mark.parametrize("n, r", [(0, 1), (1, 0), (-8, 5)])
def test_delay_errors(n, r):
    with pytest.raises(ValidationError):
        transmission_delay(n, r)


def test_empty_output_gives_zero_rows():
    rows = time_series(SimOutput.empty(100), 10)
    assert len(rows) == 10
    assert all(r.packets_sent == r.packets_received == r.bytes_delivered == 0 for r in rows)
    assert [r.bucket_start_slot for r in rows] == list(range(0, 100, 10))


@pytest.fixture(scope="module")
def lossy_run():
    return pair_run(1.0, 0.0, slots=20_000, seed=6)


def test_buckets_conserve_counts(lossy_run):
    rows = time_series(lossy_run, 700)
    firsts = sum(1 for r in lossy_run.transmissions if r.attempt == 1)
    assert sum(r.packets_sent for r in rows) == firsts
    whole = summary(lossy_run)
    assert sum(r.packets_received for r in rows) == whole["packets_received"]
    assert all(0 <= r.packets_received <= r.packets_sent for r in rows)
    assert sum(r.bytes_delivered for r in rows) == whole["packets_received"] * lossy_run.packet_bytes


def test_series_ignores_record_order(lossy_run):
    shuffled = list(lossy_run.transmissions)
    random.Random(0).shuffle(shuffled)
    deliveries = {k: list(reversed(v)) for k, v in reversed(list(lossy_run.deliveries.items()))}
    other = SimOutput(tuple(shuffled), (), deliveries, lossy_run.total_slots,
                      lossy_run.packet_len, lossy_run.packet_bytes)
    assert time_series(other, 1000) == time_series(lossy_run, 1000)


def test_series_csv(lossy_run):
    data = series_to_csv(time_series(lossy_run, 5000), 5000, 2e-5).decode()
    rows = list(csv.DictReader(io.StringIO(data)))
    assert tuple(data.splitlines()[0].split(",")) == SERIES_FIELDS
    assert len(rows) == 4
    for row in rows:
        assert 0.0 <= float(row["pdr"]) <= 1.0
        assert float(row["throughput"]) == pytest.approx(int(row["bytes_delivered"]) / 0.1 * 1000)
        assert float(row["mean_delay_slots"]) >= 0


def test_honest_network_delivers_more_sooner():
    honest = summary(pair_run(0.0, 0.0, seed=31))
    selfish = summary(pair_run(1.0, 0.0, seed=31))
    assert honest["pdr"] > selfish["pdr"]
    assert honest["mean_delay_slots"] < selfish["mean_delay_slots"]
