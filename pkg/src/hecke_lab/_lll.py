"""Compiled LLL reduction of positive definite Gram matrices."""

import numpy as np
from numba import njit


@njit(cache=True)
def _gso(G, mu, B):
    n = G.shape[0]
    for i in range(n):
        for j in range(i):
            s = G[i, j]
            for k in range(j):
                s -= mu[j, k] * mu[i, k] * B[k]
            mu[i, j] = s / B[j]
        s = G[i, i]
        for k in range(i):
            s -= mu[i, k] * mu[i, k] * B[k]
        B[i] = s


@njit(cache=True)
def _lll_one(G, U, delta, max_steps):
    n = G.shape[0]
    mu = np.zeros((n, n))
    B = np.zeros(n)
    k = 1
    steps = 0
    while k < n:
        steps += 1
        if steps > max_steps:
            return 1
        _gso(G, mu, B)
        for j in range(k - 1, -1, -1):
            q = np.round(mu[k, j])
            if q != 0.0:
                for t in range(n):
                    U[t, k] -= q * U[t, j]
                for t in range(n):
                    G[k, t] -= q * G[j, t]
                for t in range(n):
                    G[t, k] -= q * G[t, j]
                for t in range(j):
                    mu[k, t] -= q * mu[j, t]
                mu[k, j] -= q
        if B[k] >= (delta - mu[k, k - 1] * mu[k, k - 1]) * B[k - 1]:
            k += 1
        else:
            for t in range(n):
                tmp = G[k, t]
                G[k, t] = G[k - 1, t]
                G[k - 1, t] = tmp
            for t in range(n):
                tmp = G[t, k]
                G[t, k] = G[t, k - 1]
                G[t, k - 1] = tmp
                tmp = U[t, k]
                U[t, k] = U[t, k - 1]
                U[t, k - 1] = tmp
            k = max(k - 1, 1)
    return 0


@njit(cache=True)
def lll_gram_batch(Ys, delta, max_steps):
    """Returns reduced Gram matrices, float-valued integer transforms and status flags."""
    m, n, _ = Ys.shape
    G = Ys.copy()
    U = np.zeros((m, n, n))
    status = np.zeros(m, dtype=np.int64)
    for i in range(m):
        for t in range(n):
            U[i, t, t] = 1.0
        status[i] = _lll_one(G[i], U[i], delta, max_steps)
    return G, U, status
