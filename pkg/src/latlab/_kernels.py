"""Compiled inner loops for basis reduction and enumeration."""
from __future__ import annotations

import numpy as np
from numba import njit

LLL_OK = 0
LLL_RANK_LOSS = 1
ENUM_BUDGET = -2
ENUM_CAPACITY = -1


@njit(cache=True)
def _row_dot(B, i, j):
    s = 0.0
    for t in range(B.shape[1]):
        s += float(B[i, t]) * float(B[j, t])
    return s


@njit(cache=True)
def lll_inplace(B, delta):
    """Textbook LLL on the rows of B (int64 or float64), modified in place.

    Gram-Schmidt data for row k is recomputed from scratch after every size
    reduction, which keeps the floating-point coefficients honest for the
    moderate dimensions used here. Returns (status, mu, bstar_sq).
    """
    n = B.shape[0]
    mu = np.zeros((n, n))
    bb = np.zeros(n)
    bb[0] = _row_dot(B, 0, 0)
    if bb[0] <= 0.0:
        return LLL_RANK_LOSS, mu, bb
    k = 1
    while k < n:
        if k == 1:
            bb[0] = _row_dot(B, 0, 0)
        for _ in range(32):
            for j in range(k):
                r = _row_dot(B, k, j)
                for i in range(j):
                    r -= mu[j, i] * mu[k, i] * bb[i]
                mu[k, j] = r / bb[j]
            changed = False
            for j in range(k - 1, -1, -1):
                q = np.rint(mu[k, j])
                if q != 0.0:
                    changed = True
                    for t in range(B.shape[1]):
                        B[k, t] -= q * B[j, t]
                    for i in range(j):
                        mu[k, i] -= q * mu[j, i]
                    mu[k, j] -= q
            if not changed:
                break
        s = _row_dot(B, k, k)
        for j in range(k):
            s -= mu[k, j] * mu[k, j] * bb[j]
        bb[k] = s
        if bb[k] <= 1e-300:
            return LLL_RANK_LOSS, mu, bb
        if bb[k] >= (delta - mu[k, k - 1] ** 2) * bb[k - 1]:
            k += 1
        else:
            for t in range(B.shape[1]):
                tmp = B[k, t]
                B[k, t] = B[k - 1, t]
                B[k - 1, t] = tmp
            k = max(k - 1, 1)
    # final consistent Gram-Schmidt data
    for k in range(n):
        for j in range(k):
            r = _row_dot(B, k, j)
            for i in range(j):
                r -= mu[j, i] * mu[k, i] * bb[i]
            mu[k, j] = r / bb[j]
        s = _row_dot(B, k, k)
        for j in range(k):
            s -= mu[k, j] * mu[k, j] * bb[j]
        bb[k] = s
        if s <= 1e-300:
            return LLL_RANK_LOSS, mu, bb
    return LLL_OK, mu, bb


@njit(cache=True)
def enumerate_ball(mu, bb, radius_sq, max_nodes, capacity):
    """Schnorr-Euchner enumeration of all nonzero x with |sum x_i b_i|^2 <= radius_sq.

    Only one vector per +- class is produced: the highest-index nonzero
    coefficient is positive. Returns (count, coefficients, nodes); count is
    ENUM_BUDGET when the node budget runs out and ENUM_CAPACITY when more
    than `capacity` vectors qualify.
    """
    n = bb.shape[0]
    out = np.zeros((capacity, n), dtype=np.int64)
    x = np.zeros(n)
    c = np.zeros(n)
    dx = np.zeros(n)
    ddx = np.zeros(n)
    partial = np.zeros(n + 1)
    count = 0
    nodes = 0
    k = n - 1
    while True:
        d = x[k] - c[k]
        val = partial[k + 1] + d * d * bb[k]
        nodes += 1
        if nodes > max_nodes:
            return ENUM_BUDGET, out, nodes
        if val <= radius_sq:
            if k == 0:
                if x[0] != 0.0 or not _zero_above(x, 0):
                    if count >= capacity:
                        return ENUM_CAPACITY, out, nodes
                    for t in range(n):
                        out[count, t] = np.int64(x[t])
                    count += 1
            else:
                partial[k] = val
                k -= 1
                s = 0.0
                for j in range(k + 1, n):
                    s -= x[j] * mu[j, k]
                c[k] = s
                x[k] = np.rint(s)
                if s >= x[k]:
                    dx[k] = 1.0
                    ddx[k] = 1.0
                else:
                    dx[k] = -1.0
                    ddx[k] = -1.0
                continue
        else:
            k += 1
            if k == n:
                break
        if _zero_above(x, k):
            # centre is 0 and only the positive half is needed
            x[k] += 1.0
        else:
            x[k] += dx[k]
            ddx[k] = -ddx[k]
            dx[k] = ddx[k] - dx[k]
    return count, out, nodes


@njit(cache=True)
def _zero_above(x, k):
    for j in range(k + 1, x.shape[0]):
        if x[j] != 0.0:
            return False
    return True
