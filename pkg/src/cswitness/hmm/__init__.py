"""Discrete hidden Markov model machinery and the pair-interaction template."""

from ._backend import BACKEND
from .inference import (
    baum_welch,
    first_impossible_slot,
    forward_log_likelihood,
    jitter_transitions,
    posterior_occupancy,
    state_posteriors,
)
from .model import HmmModel, TrainConfig, TrainResult
from .template import STATES, pair_template_model

__all__ = [
    "BACKEND",
    "HmmModel",
    "STATES",
    "TrainConfig",
    "TrainResult",
    "baum_welch",
    "first_impossible_slot",
    "forward_log_likelihood",
    "jitter_transitions",
    "pair_template_model",
    "posterior_occupancy",
    "state_posteriors",
]
