"""Likelihood, posteriors and Baum-Welch re-estimation."""

from __future__ import annotations

import logging

import numpy as np

from ..errors import TrainingError, ValidationError
from ._backend import kernel
from .model import HmmModel, TrainConfig, TrainResult

log = logging.getLogger(__name__)


def _symbols(m: HmmModel, obs) -> np.ndarray:
    seq = getattr(obs, "symbols", obs)
    seq = np.ascontiguousarray(seq, dtype=np.int64)
    if seq.ndim != 1 or len(seq) == 0:
        raise ValidationError("observation sequence must be a non-empty 1-d sequence")
    if seq.min() < 0 or seq.max() >= m.n_symbols:
        raise ValidationError(f"observation symbols must index into [0, {m.n_symbols})")
    return seq


def forward_log_likelihood(m: HmmModel, obs) -> float:
    """``log P(obs | m)``; ``-inf`` when the sequence is impossible."""
    ll, _ = kernel.forward(m.pi, m.a, m.b, _symbols(m, obs))
    return ll


def first_impossible_slot(m: HmmModel, obs) -> int | None:
    _, fail = kernel.forward(m.pi, m.a, m.b, _symbols(m, obs))
    return None if fail < 0 else int(fail)


def state_posteriors(m: HmmModel, obs) -> np.ndarray:
    """Per-slot posteriors ``gamma[t, s]``."""
    gamma = kernel.posteriors(m.pi, m.a, m.b, _symbols(m, obs))
    if gamma is None:
        raise ValidationError("observation has zero probability under the model")
    return gamma


def posterior_occupancy(m: HmmModel, obs) -> np.ndarray:
    """Expected number of slots spent in each state."""
    ll, fail, _, occ, _, _ = kernel.forward_backward(m.pi, m.a, m.b, _symbols(m, obs))
    if fail >= 0:
        raise ValidationError(f"observation has zero probability under the model (slot {fail})")
    return occ


def _normalize_rows(counts: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    out = fallback.copy()
    totals = counts.sum(axis=1)
    ok = totals > 0
    out[ok] = counts[ok] / totals[ok, None]
    return out


def jitter_transitions(m: HmmModel, rng: np.random.Generator, spread: float = 0.5) -> HmmModel:
    """Multiply every transition by ``U(1 - spread, 1 + spread)`` and renormalize.

    Structural zeros stay zero.
    """
    a = m.a * rng.uniform(1.0 - spread, 1.0 + spread, size=m.a.shape)
    a /= a.sum(axis=1, keepdims=True)
    return HmmModel(m.pi, a, m.b, m.state_labels)


def _fit_once(init: HmmModel, seq: np.ndarray, cfg: TrainConfig):
    model = init
    ll, fail, g0, occ, trans, emit = kernel.forward_backward(model.pi, model.a, model.b, seq)
    if fail >= 0:
        return None, fail
    history = [ll]
    iterations = 0
    for it in range(1, cfg.max_iters + 1):
        pi = g0 / g0.sum()
        a = _normalize_rows(trans, model.a)
        b = model.b if cfg.freeze_emissions else _normalize_rows(emit, model.b)
        model = HmmModel(pi, a, b, model.state_labels)
        iterations = it
        new_ll, fail, g0, occ, trans, emit = kernel.forward_backward(model.pi, model.a, model.b, seq)
        history.append(new_ll)
        improvement = new_ll - ll
        ll = new_ll
        if improvement < cfg.tol:
            break
    return TrainResult(model, ll, iterations, occ, trans, tuple(history)), -1


def baum_welch(init: HmmModel, obs, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """EM re-estimation of ``pi`` and ``a`` (and ``b`` unless frozen).

    Restart 0 starts from ``init``; later restarts start from seeded
    transition jitters of it.  The restart with the highest final
    log-likelihood wins, earliest on ties.
    """
    cfg.validate()
    seq = _symbols(init, obs)
    if len(seq) < 2:
        raise ValidationError("Baum-Welch needs at least two observations")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    best: TrainResult | None = None
    first_fail = None
    for r in range(cfg.restarts):
        start = init if r == 0 else jitter_transitions(init, rng)
        result, fail = _fit_once(start, seq, cfg)
        if result is None:
            first_fail = fail if first_fail is None else min(first_fail, fail)
            continue
        log.debug("restart %d: ll=%.6f after %d iterations", r, result.log_likelihood, result.iterations)
        if best is None or result.log_likelihood > best.log_likelihood:
            best = TrainResult(result.model, result.log_likelihood, result.iterations,
                               result.occupancy, result.transitions, result.history, r)
    if best is None:
        raise TrainingError(
            f"observation impossible under every restart; first impossible slot {first_fail}",
            slot=first_fail,
        )
    return best
