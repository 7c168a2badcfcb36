import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cswitness.simulator import NodeConfig, SimConfig, Topology, run_simulation  # noqa: E402


def pair_topology(mutual=True):
    ids = ("x", "y", "rx", "ry")
    links = (("x", "rx"), ("y", "ry"))
    if mutual:
        return Topology.clique(ids, links)
    return Topology(ids, frozenset(), links)


def pair_run(p_x=0.0, p_y=0.0, slots=50_000, seed=1, **node_kw):
    nodes = [NodeConfig("x", p_s=p_x, **node_kw), NodeConfig("y", p_s=p_y, **node_kw),
             NodeConfig("rx"), NodeConfig("ry")]
    return run_simulation(pair_topology(), nodes, SimConfig(slots, seed=seed))


@pytest.fixture(scope="session")
def honest_pair():
    return pair_run(0.0, 0.0)


@pytest.fixture(scope="session")
def selfish_pair():
    return pair_run(1.0, 0.0)


def train_on_run(out, seed=0, x="x", y="y"):
    """Perfectly sniffed pair observations of a run, trained with defaults."""
    from cswitness.hmm import TrainConfig
    from cswitness.pipeline import train_pair
    from cswitness.sniffer import SnifferConfig, capture, extract_observations, merge

    trace = capture(out, SnifferConfig("s", frozenset({x, y}), 0.0, 0))
    obs = extract_observations(merge([trace], out.total_slots), x, y)
    return train_pair(obs, seed, TrainConfig(), 0.02)


@pytest.fixture(scope="session")
def selfish_training(selfish_pair):
    return train_on_run(selfish_pair)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
