import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import pair_run, pair_topology, train_on_run
from cswitness.detector import (
    DetectorConfig,
    PairInference,
    asymmetry,
    deferral_probabilities,
    evidence_slots,
    infer_pair,
    report_from_json,
    selfishness_scores,
)
from cswitness.errors import InsufficientEvidence, ValidationError
from cswitness.hmm import TrainResult, pair_template_model
from cswitness.hmm.template import XD, XY, YD
from cswitness.pipeline import analyze
from cswitness.scenarios import clique
from cswitness.simulator import NodeConfig, SimConfig, ground_truth_deferral, run_simulation


def _result(xd, xy, yd):
    occ = np.zeros(6)
    occ[[XD, XY, YD]] = xd, xy, yd
    return TrainResult(pair_template_model(), -1.0, 1, occ, np.zeros((6, 6)))


def test_occupancy_ratio_examples():
    assert deferral_probabilities(_result(90, 10, 50), method="occupancy")[0] == pytest.approx(0.9)
    assert deferral_probabilities(_result(0, 100, 0), method="occupancy") == (0.0, 0.0)


def test_evidence_slots_sum():
    assert evidence_slots(_result(90, 10, 50)) == pytest.approx(150)


@pytest.mark.parametrize("xd, xy, yd", [(20, 10, 90), (90, 10, 20), (0, 0, 0)])
def test_insufficient_evidence(xd, xy, yd):
    with pytest.raises(InsufficientEvidence):
        deferral_probabilities(_result(xd, xy, yd), min_evidence_slots=50)


def test_unknown_method():
    with pytest.raises(ValidationError):
        deferral_probabilities(_result(90, 10, 90), method="votes")


def test_asymmetry_examples():
    assert asymmetry(0.9, 0.9) == 0
    assert asymmetry(0.1, 0.9) == pytest.approx(0.8)
    with pytest.raises(ValidationError):
        asymmetry(1.2, 0.0)


@given(st.floats(0, 1), st.floats(0, 1))
def test_asymmetry_is_antisymmetric(a, b):
    assert asymmetry(a, b) == -asymmetry(b, a)


def _inf(x, y, eta):
    d_x = 0.5 - eta / 2
    return PairInference((x, y), d_x, d_x + eta, eta, -1.0, 100.0)


def test_score_example():
    report = selfishness_scores([_inf("X", "a", 0.4), _inf("X", "b", -0.2), _inf("c", "X", -0.6)])
    x = report.node("X")
    assert x.score == pytest.approx(0.5)
    assert sorted(w for w, _ in x.witnesses) == ["a", "c"]
    assert x.flagged
    assert not report.node("a").flagged


def test_all_negative_scores_zero():
    report = selfishness_scores([_inf("X", "a", -0.4), _inf("X", "b", 0.0)])
    assert report.node("X").score == 0.0
    assert not report.node("X").flagged


def test_unscored_nodes_are_listed():
    report = selfishness_scores([_inf("a", "b", 0.2)], nodes=["a", "b", "lonely"])
    assert report.node("lonely").score == 0.0 and report.node("lonely").witnesses == ()


@pytest.mark.parametrize("pairs", [[("a", "b"), ("b", "a")], [("a", "b"), ("a", "b")], [("a", "a")]])
def test_duplicate_pairs_rejected(pairs):
    with pytest.raises(ValidationError):
        selfishness_scores([_inf(x, y, 0.1) for x, y in pairs])


etas = st.lists(st.floats(-1, 1), min_size=1, max_size=6)


@given(etas, st.floats(0, 1), st.floats(0, 1))
def test_raising_tau_witness_never_adds_witnesses(values, t1, t2):
    lo, hi = sorted((t1, t2))
    infs = [_inf("X", f"w{k}", e) for k, e in enumerate(values)]
    a = selfishness_scores(infs, DetectorConfig(tau_witness=lo))
    b = selfishness_scores(infs, DetectorConfig(tau_witness=hi))
    for na, nb in zip(a.nodes, b.nodes):
        assert len(nb.witnesses) <= len(na.witnesses)


@given(etas, st.floats(0, 1), st.floats(0, 1), st.integers(1, 4))
def test_flag_soundness_and_nonnegative_score(values, tw, ts, k):
    cfg = DetectorConfig(tau_witness=tw, tau_selfish=ts, k_min=k)
    report = selfishness_scores([_inf("X", f"w{j}", e) for j, e in enumerate(values)], cfg)
    for n in report.nodes:
        assert n.score >= 0
        assert n.flagged == (n.score > ts and len(n.witnesses) >= k)


def test_report_json_shape_and_round_trip():
    report = selfishness_scores([_inf("X", "a", 0.4), _inf("X", "b", 0.6)])
    back = report_from_json(report.to_json())
    assert back == report
    d = json.loads(report.to_json())
    assert set(d) == {"nodes", "pairs"}
    assert set(d["nodes"][0]) == {"node_id", "score", "witnesses", "flagged"}
    assert set(d["pairs"][0]) == {"x", "y", "d_x", "d_y", "eta", "log_likelihood", "evidence_slots"}


def test_fully_selfish_pair_is_recovered(selfish_pair, selfish_training):
    d_x, d_y = deferral_probabilities(selfish_training)
    truth = ground_truth_deferral(selfish_pair, "x", "y")
    assert d_x <= 0.2
    assert abs(d_x - truth) <= 0.1
    assert d_y >= 0.9


def test_orientation_consistency(selfish_training):
    a = infer_pair(selfish_training, ("x", "y"))
    assert a.eta == a.d_y - a.d_x
    report = selfishness_scores([a])
    x_eta = dict(report.node("y").witnesses).get("x", None)
    assert report.node("x").witnesses[0] == ("y", a.eta)
    assert x_eta is None  # y is accused by -eta < tau_witness


def test_honest_pair_is_symmetric(honest_pair):
    inf = infer_pair(train_on_run(honest_pair), ("x", "y"))
    assert abs(inf.eta) <= 0.15


def test_unrelated_pair_lacks_evidence():
    nodes = [NodeConfig("x", arrival=0.0005), NodeConfig("y", arrival=0.0005),
             NodeConfig("rx"), NodeConfig("ry")]
    out = run_simulation(pair_topology(), nodes, SimConfig(5000, seed=3))
    with pytest.raises(InsufficientEvidence):
        infer_pair(train_on_run(out), ("x", "y"))


@pytest.fixture(scope="module")
def five_node():
    return analyze(clique(5, {"n0": 1.0}, seed=21, sniffer_loss=(0.1, 0.1)))


@pytest.mark.slow
def test_five_node_selfish_node_is_singled_out(five_node):
    report = five_node.report
    scores = {n.node_id: n.score for n in report.nodes}
    assert max(scores, key=scores.get) == "n0"
    assert [n.node_id for n in report.nodes if n.flagged] == ["n0"]
    assert len(report.node("n0").witnesses) >= 2
    assert five_node.excluded == ()


@pytest.mark.slow
def test_five_node_pairs_recover_ground_truth(five_node):
    for inf in five_node.inferences:
        for node, other, est in ((*inf.pair, inf.d_x), (inf.pair[1], inf.pair[0], inf.d_y)):
            truth = ground_truth_deferral(five_node.sim, node, other)
            assert abs(est - truth) <= 0.15, (inf.pair, node)


def test_partial_selfishness_is_graded():
    inf = infer_pair(train_on_run(pair_run(0.5, 0.0, seed=8)), ("x", "y"))
    assert 0.3 <= inf.d_x <= 0.7
    assert 0.3 <= inf.eta <= 0.7
