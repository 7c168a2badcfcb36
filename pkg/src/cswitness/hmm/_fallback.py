"""Pure numpy scaled forward-backward.

Same call signatures as the compiled ``_kernels`` module.  Arrays are
``float64`` C-contiguous; ``obs`` is an ``int64`` vector of symbol codes.
"""

import numpy as np

NAME = "python"


def _forward(pi, a, b, obs):
    T, n = len(obs), len(pi)
    alpha = np.empty((T, n))
    scale = np.empty(T)
    f = pi * b[:, obs[0]]
    for t in range(T):
        if t:
            f = (alpha[t - 1] @ a) * b[:, obs[t]]
        c = f.sum()
        if c <= 0.0:
            return alpha, scale, t
        alpha[t] = f / c
        scale[t] = c
    return alpha, scale, -1


def forward(pi, a, b, obs):
    """Return ``(log_likelihood, first_impossible_slot)``; the slot is -1 if none."""
    _, scale, fail = _forward(pi, a, b, obs)
    if fail >= 0:
        return -np.inf, fail
    return float(np.log(scale).sum()), -1


def _backward(a, b, obs, scale):
    T, n = len(obs), a.shape[0]
    beta = np.empty((T, n))
    beta[T - 1] = 1.0
    for t in range(T - 2, -1, -1):
        beta[t] = a @ (b[:, obs[t + 1]] * beta[t + 1]) / scale[t + 1]
    return beta


def posteriors(pi, a, b, obs):
    """Per-slot state posteriors, shape ``(T, n_states)``; ``None`` if P(obs)=0."""
    alpha, scale, fail = _forward(pi, a, b, obs)
    if fail >= 0:
        return None
    return alpha * _backward(a, b, obs, scale)


def forward_backward(pi, a, b, obs):
    """Sufficient statistics for one Baum-Welch step.

    Returns ``(loglik, fail, gamma0, occupancy, transitions, emissions)``
    where ``occupancy[i] = sum_t gamma_t(i)``, ``transitions[i, j] =
    sum_t xi_t(i, j)`` and ``emissions[i, k] = sum_{t: o_t = k} gamma_t(i)``.
    """
    n, m = b.shape
    alpha, scale, fail = _forward(pi, a, b, obs)
    if fail >= 0:
        z = np.zeros(n)
        return -np.inf, fail, z, z.copy(), np.zeros((n, n)), np.zeros((n, m))
    beta = _backward(a, b, obs, scale)
    gamma = alpha * beta
    # xi_t(i,j) = alpha_t(i) a(i,j) b(j,o_{t+1}) beta_{t+1}(j) / c_{t+1}
    w = b[:, obs[1:]].T * beta[1:] / scale[1:, None]
    transitions = a * (alpha[:-1].T @ w)
    emissions = np.zeros((n, m))
    for k in range(m):
        emissions[:, k] = gamma[obs == k].sum(axis=0)
    return (float(np.log(scale).sum()), -1, gamma[0].copy(), gamma.sum(axis=0),
            transitions, emissions)
