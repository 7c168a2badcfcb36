"""Passive detection of selfish carrier-sense behaviour in 802.11-style networks.

Pipeline: :mod:`~cswitness.simulator` produces ground-truth transmissions,
:mod:`~cswitness.sniffer` captures and merges them into per-pair symbol
sequences, :mod:`~cswitness.hmm` learns the pair interaction chain,
:mod:`~cswitness.detector` turns it into deferral asymmetries and scores,
and :mod:`~cswitness.metrics` reports PDR, throughput and delay.
"""

from .errors import CorruptionError, InsufficientEvidence, TrainingError, ValidationError

__version__ = "0.1.0"

__all__ = ["CorruptionError", "InsufficientEvidence", "TrainingError", "ValidationError"]
