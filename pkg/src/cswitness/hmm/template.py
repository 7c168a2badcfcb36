"""Six-state chain for the joint sender-side behaviour of a node pair (x, y).

========  =====================================  ====
state     meaning                                emits
========  =====================================  ====
s_II      neither transmits                      i
s_XT      x transmits, y not deferring to it     x
s_YT      y transmits, x not deferring to it     y
s_XY      both transmit                          xy
s_Xd      y transmits and x defers               y
s_Yd      x transmits and y defers               x
========  =====================================  ====

``s_YT`` and ``s_Xd`` (likewise ``s_XT`` and ``s_Yd``) emit the same symbol
and differ only in their dynamics.  A carrier can only be sensed from the
slot after a transmission starts, so a deferral state is reachable only
from a slot in which the other node was already on air; those transitions
are structural zeros and Baum-Welch keeps them at zero.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .model import HmmModel

STATES = ("s_II", "s_XT", "s_YT", "s_XY", "s_Xd", "s_Yd")
II, XT, YT, XY, XD, YD = range(6)
# symbol codes: i=0, x=1, y=2, xy=3
DESIGNATED = (0, 1, 2, 3, 2, 1)
N_SYMBOLS = 4


def allowed_transitions() -> np.ndarray:
    """Boolean mask of transitions the MAC dynamics can produce."""
    mask = np.ones((6, 6), dtype=bool)
    for s in range(6):
        if s not in (YT, XY, XD):
            mask[s, XD] = False
        if s not in (XT, XY, YD):
            mask[s, YD] = False
    # A deferring node stays silent until the busy period it honours ends,
    # so the other node cannot start on top of it from a deferral state.
    mask[XD, XY] = mask[XD, YT] = False
    mask[YD, XY] = mask[YD, XT] = False
    return mask


def emission_matrix(epsilon: float) -> np.ndarray:
    if not 0.0 <= epsilon < 0.5:
        raise ValidationError(f"epsilon={epsilon} outside [0, 0.5)")
    b = np.full((6, N_SYMBOLS), epsilon / (N_SYMBOLS - 1))
    for s, k in enumerate(DESIGNATED):
        b[s, k] = 1.0 - epsilon
    return b


def pair_template_model(epsilon: float = 0.02, seed: int = 0, jitter: float = 0.5) -> HmmModel:
    """Initial pair model: allowed transitions drawn around uniform, seeded."""
    b = emission_matrix(epsilon)
    rng = np.random.Generator(np.random.PCG64(seed))
    mask = allowed_transitions()
    a = np.where(mask, rng.uniform(1.0 - jitter, 1.0 + jitter, size=(6, 6)), 0.0)
    a /= a.sum(axis=1, keepdims=True)
    pi = np.full(6, 1.0 / 6)
    return HmmModel(pi, a, b, STATES)
