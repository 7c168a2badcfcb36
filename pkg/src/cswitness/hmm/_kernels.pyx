# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled scaled forward-backward; mirrors ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, INFINITY

cnp.import_array()

NAME = "cython"


cdef Py_ssize_t _forward(const double[::1] pi, const double[:, ::1] a,
                         const double[:, ::1] b, const cnp.int64_t[::1] obs,
                         double[:, ::1] alpha, double[::1] scale) noexcept nogil:
    cdef Py_ssize_t T = obs.shape[0], n = pi.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double c, s
    c = 0.0
    for j in range(n):
        alpha[0, j] = pi[j] * b[j, obs[0]]
        c += alpha[0, j]
    if c <= 0.0:
        return 0
    for j in range(n):
        alpha[0, j] /= c
    scale[0] = c
    for t in range(1, T):
        c = 0.0
        for j in range(n):
            s = 0.0
            for i in range(n):
                s += alpha[t - 1, i] * a[i, j]
            s *= b[j, obs[t]]
            alpha[t, j] = s
            c += s
        if c <= 0.0:
            return t
        for j in range(n):
            alpha[t, j] /= c
        scale[t] = c
    return -1


def forward(const double[::1] pi, const double[:, ::1] a, const double[:, ::1] b,
            const cnp.int64_t[::1] obs):
    cdef Py_ssize_t T = obs.shape[0], n = pi.shape[0], t, fail
    cdef double[:, ::1] alpha = np.empty((T, n))
    cdef double[::1] scale = np.empty(T)
    cdef double ll = 0.0
    with nogil:
        fail = _forward(pi, a, b, obs, alpha, scale)
        if fail < 0:
            for t in range(T):
                ll += log(scale[t])
    if fail >= 0:
        return -INFINITY, fail
    return ll, -1


def posteriors(const double[::1] pi, const double[:, ::1] a, const double[:, ::1] b,
               const cnp.int64_t[::1] obs):
    from . import _fallback
    return _fallback.posteriors(np.asarray(pi), np.asarray(a), np.asarray(b), np.asarray(obs))


def forward_backward(const double[::1] pi, const double[:, ::1] a, const double[:, ::1] b,
                     const cnp.int64_t[::1] obs):
    cdef Py_ssize_t T = obs.shape[0], n = b.shape[0], m = b.shape[1]
    cdef Py_ssize_t t, i, j, fail
    cdef double[:, ::1] alpha = np.empty((T, n))
    cdef double[::1] scale = np.empty(T)
    g0 = np.zeros(n)
    occ = np.zeros(n)
    trans = np.zeros((n, n))
    emit = np.zeros((n, m))
    cdef double[::1] g0_v = g0, occ_v = occ
    cdef double[:, ::1] trans_v = trans, emit_v = emit
    cdef double[::1] beta = np.empty(n), nbeta = np.empty(n), w = np.empty(n)
    cdef double ll = 0.0, g, s
    with nogil:
        fail = _forward(pi, a, b, obs, alpha, scale)
    if fail >= 0:
        return -INFINITY, fail, g0, occ, trans, emit
    with nogil:
        for t in range(T):
            ll += log(scale[t])
        for i in range(n):
            beta[i] = 1.0
        t = T - 1
        for i in range(n):
            g = alpha[t, i]
            occ_v[i] += g
            emit_v[i, obs[t]] += g
        while t > 0:
            # beta currently holds beta_t; build beta_{t-1}
            for j in range(n):
                w[j] = b[j, obs[t]] * beta[j] / scale[t]
            for i in range(n):
                s = 0.0
                for j in range(n):
                    s += a[i, j] * w[j]
                    trans_v[i, j] += alpha[t - 1, i] * a[i, j] * w[j]
                nbeta[i] = s
            for i in range(n):
                beta[i] = nbeta[i]
                g = alpha[t - 1, i] * beta[i]
                occ_v[i] += g
                emit_v[i, obs[t - 1]] += g
                if t == 1:
                    g0_v[i] = g
            t -= 1
        if T == 1:
            for i in range(n):
                g0_v[i] = alpha[0, i]
    return ll, -1, g0, occ, trans, emit
