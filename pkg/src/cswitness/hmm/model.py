"""Discrete-emission HMM parameters and training records."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError

ROW_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HmmModel:
    pi: np.ndarray
    a: np.ndarray
    b: np.ndarray
    state_labels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pi", np.ascontiguousarray(self.pi, dtype=np.float64))
        object.__setattr__(self, "a", np.ascontiguousarray(self.a, dtype=np.float64))
        object.__setattr__(self, "b", np.ascontiguousarray(self.b, dtype=np.float64))
        if not self.state_labels:
            object.__setattr__(self, "state_labels", tuple(f"s{k}" for k in range(len(self.pi))))
        else:
            object.__setattr__(self, "state_labels", tuple(self.state_labels))
        self.validate()

    @property
    def n_states(self) -> int:
        return len(self.pi)

    @property
    def n_symbols(self) -> int:
        return self.b.shape[1]

    def validate(self) -> None:
        n = len(self.pi)
        if self.pi.ndim != 1 or n == 0:
            raise ValidationError("pi must be a non-empty vector")
        if self.a.shape != (n, n):
            raise ValidationError(f"a has shape {self.a.shape}, expected {(n, n)}")
        if self.b.ndim != 2 or self.b.shape[0] != n or self.b.shape[1] == 0:
            raise ValidationError(f"b has shape {self.b.shape}, expected ({n}, n_symbols)")
        if len(self.state_labels) != n:
            raise ValidationError("one state label per state required")
        for name, arr in (("pi", self.pi), ("a", self.a), ("b", self.b)):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValidationError(f"{name} has negative or non-finite entries")
            sums = arr.sum(axis=-1)
            if np.any(np.abs(sums - 1.0) > ROW_TOL):
                raise ValidationError(f"{name} is not stochastic (sums {sums})")

    def __eq__(self, other):
        if not isinstance(other, HmmModel):
            return NotImplemented
        return (self.state_labels == other.state_labels
                and np.array_equal(self.pi, other.pi)
                and np.array_equal(self.a, other.a)
                and np.array_equal(self.b, other.b))

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "n_symbols": self.n_symbols,
            "pi": self.pi.tolist(),
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "state_labels": list(self.state_labels),
        }

    def to_json(self) -> bytes:
        return (json.dumps(self.to_dict(), indent=2) + "\n").encode("utf-8")

    @classmethod
    def from_dict(cls, d: dict) -> "HmmModel":
        m = cls(np.array(d["pi"]), np.array(d["a"]), np.array(d["b"]), tuple(d["state_labels"]))
        if m.n_states != d["n_states"] or m.n_symbols != d["n_symbols"]:
            raise ValidationError("model JSON dimensions disagree with its arrays")
        return m

    @classmethod
    def from_json(cls, data: bytes) -> "HmmModel":
        return cls.from_dict(json.loads(data.decode("utf-8")))


@dataclass(frozen=True)
class TrainConfig:
    max_iters: int = 100
    tol: float = 1e-4
    restarts: int = 3
    freeze_emissions: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValidationError("tol must be > 0")
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")


@dataclass(frozen=True, eq=False)
class TrainResult:
    """Outcome of Baum-Welch.

    ``occupancy[s]`` and ``transitions[s, r]`` are the expected slot count in
    state ``s`` and expected number of ``s -> r`` moves under the returned
    model.  ``history`` lists the log-likelihood before the first and after
    every re-estimation step of the winning restart.
    """

    model: HmmModel
    log_likelihood: float
    iterations: int
    occupancy: np.ndarray
    transitions: np.ndarray
    history: tuple[float, ...] = field(default=())
    restart: int = 0
