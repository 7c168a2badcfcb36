"""Exception types shared across the pipeline."""


class CsWitnessError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CsWitnessError, ValueError):
    """Input or configuration violates a documented constraint.

    ``errors`` holds ``(path, message)`` tuples when several problems were
    collected at once (config parsing); otherwise it is a single entry.
    """

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = list(errors) if errors else [("", message)]


class CorruptionError(CsWitnessError):
    """Merged traces disagree about the same transmission."""


class TrainingError(CsWitnessError):
    """Baum-Welch could not produce a model with finite likelihood."""

    def __init__(self, message, slot=None):
        super().__init__(message)
        self.slot = slot


class InsufficientEvidence(CsWitnessError):
    """Too few contended slots to estimate a deferral probability."""
